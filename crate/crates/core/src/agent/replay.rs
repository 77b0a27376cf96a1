//! Ring-buffer experience replay.
//!
//! Transitions store the strategy *label*, not an embedding snapshot, so a
//! sampled batch always sees the current embedding table.

use rand_chacha::ChaCha8Rng;

use crate::env::StateVector;
use crate::strategy::StrategyLabel;

#[derive(Debug, Clone)]
pub struct Transition {
    pub state: StateVector,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: StateVector,
    pub label: StrategyLabel,
}

pub struct ReplayBuffer {
    capacity: usize,
    entries: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            capacity,
            entries: Vec::with_capacity(capacity.min(4096)),
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, transition: Transition) {
        if self.entries.len() < self.capacity {
            self.entries.push(transition);
        } else {
            self.entries[self.cursor] = transition;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Uniform sample without replacement within the batch.
    pub fn sample(&self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<&Transition> {
        let idx = rand::seq::index::sample(rng, self.entries.len(), batch.min(self.entries.len()));
        idx.iter().map(|i| &self.entries[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use ndarray::Array2;

    fn transition(tag: f64) -> Transition {
        let state = StateVector {
            features: Array2::from_elem((2, 3), tag),
            global: [tag, 0.0, 0.0],
        };
        Transition {
            state: state.clone(),
            action: vec![tag; 4],
            reward: tag,
            next_state: state,
            label: StrategyLabel::A,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(transition(i as f64));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = buf.entries.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_is_seeded_and_without_replacement() {
        let mut buf = ReplayBuffer::new(100);
        for i in 0..50 {
            buf.push(transition(i as f64));
        }
        let mut r1 = seeds::rng(4, &[seeds::stream::REPLAY]);
        let mut r2 = seeds::rng(4, &[seeds::stream::REPLAY]);
        let a: Vec<f64> = buf.sample(16, &mut r1).iter().map(|t| t.reward).collect();
        let b: Vec<f64> = buf.sample(16, &mut r2).iter().map(|t| t.reward).collect();
        assert_eq!(a, b);
        let mut dedup = a.clone();
        dedup.sort_by(f64::total_cmp);
        dedup.dedup();
        assert_eq!(dedup.len(), 16);
    }
}
