//! The strategy-conditioned TD3 learner: shared additive attention and
//! embedding table feeding an actor and twin critics, trained off-policy
//! from the replay buffer with target-policy smoothing, clipped double-Q,
//! delayed actor updates, and soft target tracking.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::attention::{AttentionGrad, AttentionLayer, FEATURE_CATEGORIES};
use super::nn::{soft_update, Adam, Mlp, OutputActivation, ParamVec};
use super::replay::{ReplayBuffer, Transition};
use crate::env::StateVector;
use crate::seeds::{self, stream};
use crate::strategy::{StrategyEmbeddingTable, StrategyLabel};
use crate::Error;

impl ParamVec for StrategyEmbeddingTable {
    fn num_params(&self) -> usize {
        self.table.len()
    }

    fn params(&self) -> Vec<f64> {
        self.table.iter().copied().collect()
    }

    fn set_params(&mut self, data: &[f64]) {
        assert_eq!(data.len(), self.table.len());
        for (dst, src) in self.table.iter_mut().zip(data) {
            *dst = *src;
        }
    }
}

/// Network and optimizer hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentConfig {
    pub num_users: usize,
    pub d_f: usize,
    pub d_str: usize,
    pub d_h: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub policy_delay: usize,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub exploration_noise_std: f64,
    /// When false the agent runs as the unguided ablation: the strategy
    /// embedding is a constant zero vector and reward shaping is off.
    pub guided: bool,
}

impl AgentConfig {
    pub fn new(num_users: usize, guided: bool) -> Self {
        Self {
            num_users,
            d_f: crate::env::D_F,
            d_str: 16,
            d_h: 32,
            hidden: 128,
            batch_size: 256,
            buffer_capacity: 100_000,
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            policy_delay: 2,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            exploration_noise_std: 0.1,
            guided,
        }
    }

    /// Actor/critic input width: [context, global KPIs, embedding].
    pub fn z_dim(&self) -> usize {
        self.d_f + 3 + self.d_str
    }

    pub fn action_dim(&self) -> usize {
        2 * self.num_users
    }
}

/// Per-update loss diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct TrainDiag {
    pub critic_loss: f64,
    pub actor_loss: Option<f64>,
}

/// The learner with online and target copies of every trainable component.
pub struct Agent {
    pub cfg: AgentConfig,
    pub attention: AttentionLayer,
    pub embedding: StrategyEmbeddingTable,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    target_attention: AttentionLayer,
    target_embedding: StrategyEmbeddingTable,
    target_actor: Mlp,
    target_critic1: Mlp,
    target_critic2: Mlp,
    opt_actor: Adam,
    opt_critic1: Adam,
    opt_critic2: Adam,
    opt_attention: Adam,
    opt_embedding: Adam,
    update_count: u64,
}

impl Agent {
    pub fn new(cfg: AgentConfig, seed: u64) -> Self {
        let mut net_rng = seeds::rng(seed, &[stream::NETWORK_INIT]);
        let mut emb_rng = seeds::rng(seed, &[stream::EMBEDDING]);
        let attention = AttentionLayer::new(cfg.d_h, cfg.d_f, cfg.d_str, &mut net_rng);
        let embedding = if cfg.guided {
            StrategyEmbeddingTable::new(cfg.d_str, &mut emb_rng)
        } else {
            StrategyEmbeddingTable::zeros(cfg.d_str)
        };
        let mut actor = Mlp::new(
            cfg.z_dim(),
            cfg.hidden,
            cfg.action_dim(),
            OutputActivation::Sigmoid,
            &mut net_rng,
        );
        // Optimistic output init: bias the sigmoid head so the initial policy
        // allocates generously (~0.88 of the caps). Value is monotone in the
        // allocated fractions over most of the action space, so starting near
        // saturation removes a long drift phase and its instability.
        actor.l3.b += 2.0;
        let critic_in = cfg.z_dim() + cfg.action_dim();
        let critic1 = Mlp::new(critic_in, cfg.hidden, 1, OutputActivation::Identity, &mut net_rng);
        let critic2 = Mlp::new(critic_in, cfg.hidden, 1, OutputActivation::Identity, &mut net_rng);
        let opt_actor = Adam::new(cfg.actor_lr, actor.num_params());
        let opt_critic1 = Adam::new(cfg.critic_lr, critic1.num_params());
        let opt_critic2 = Adam::new(cfg.critic_lr, critic2.num_params());
        let opt_attention = Adam::new(cfg.actor_lr, attention.num_params());
        let opt_embedding = Adam::new(cfg.actor_lr, embedding.num_params());
        Self {
            target_attention: attention.clone(),
            target_embedding: embedding.clone(),
            target_actor: actor.clone(),
            target_critic1: critic1.clone(),
            target_critic2: critic2.clone(),
            cfg,
            attention,
            embedding,
            actor,
            critic1,
            critic2,
            opt_actor,
            opt_critic1,
            opt_critic2,
            opt_attention,
            opt_embedding,
            update_count: 0,
        }
    }

    /// Embedding row for a label: zeros in unguided (ablation) mode.
    fn embed(&self, label: StrategyLabel, target: bool) -> Array1<f64> {
        if !self.cfg.guided {
            return Array1::zeros(self.cfg.d_str);
        }
        let table = if target { &self.target_embedding } else { &self.embedding };
        table.embed(label)
    }

    /// Stack per-sample z = [c, g, e_sigma] rows for a batch.
    fn batch_z(
        &self,
        states: &[&StateVector],
        labels: &[StrategyLabel],
        target: bool,
    ) -> (Array2<f64>, Vec<super::attention::AttentionCache>, Vec<Array1<f64>>) {
        let att = if target { &self.target_attention } else { &self.attention };
        let b = states.len();
        let mut z = Array2::zeros((b, self.cfg.z_dim()));
        let mut caches = Vec::with_capacity(b);
        let mut embeds = Vec::with_capacity(b);
        for i in 0..b {
            let e = self.embed(labels[i], target);
            let (context, cache) = att.forward(&states[i].features.view(), &e.view());
            let mut row = z.row_mut(i);
            for (j, v) in context.iter().enumerate() {
                row[j] = *v;
            }
            for (j, v) in states[i].global.iter().enumerate() {
                row[self.cfg.d_f + j] = *v;
            }
            for (j, v) in e.iter().enumerate() {
                row[self.cfg.d_f + 3 + j] = *v;
            }
            caches.push(cache);
            embeds.push(e);
        }
        (z, caches, embeds)
    }

    /// Backprop dZ into attention and embedding gradients.
    fn backward_z(
        &self,
        states: &[&StateVector],
        labels: &[StrategyLabel],
        caches: &[super::attention::AttentionCache],
        embeds: &[Array1<f64>],
        dz: &Array2<f64>,
        att_grad: &mut AttentionGrad,
        emb_grad: &mut Array2<f64>,
    ) {
        let d_f = self.cfg.d_f;
        for i in 0..states.len() {
            let row = dz.row(i);
            let d_context = row.slice(ndarray::s![..d_f]);
            let d_e = self.attention.backward_with_embedding(
                &states[i].features.view(),
                &embeds[i].view(),
                &caches[i],
                &d_context,
                att_grad,
            );
            if self.cfg.guided {
                let mut target_row = emb_grad.row_mut(labels[i].index());
                for j in 0..self.cfg.d_str {
                    target_row[j] += d_e[j] + row[d_f + 3 + j];
                }
            }
        }
    }

    /// Deterministic policy output plus optional Gaussian exploration noise,
    /// clamped into [0, 1].
    pub fn act(
        &self,
        state: &StateVector,
        label: StrategyLabel,
        noise_std: f64,
        rng: &mut ChaCha8Rng,
    ) -> Vec<f64> {
        let (z, _, _) = self.batch_z(&[state], &[label], false);
        let (a, _) = self.actor.forward(&z);
        let normal = Normal::new(0.0, noise_std.max(f64::MIN_POSITIVE)).unwrap();
        a.row(0)
            .iter()
            .map(|v| {
                let noise = if noise_std > 0.0 { normal.sample(rng) } else { 0.0 };
                (v + noise).clamp(0.0, 1.0)
            })
            .collect()
    }

    /// Mean attention weights over feature categories for the current policy
    /// on one state (interpretability logging).
    pub fn attention_summary(
        &self,
        state: &StateVector,
        label: StrategyLabel,
    ) -> [f64; FEATURE_CATEGORIES] {
        let e = self.embed(label, false);
        let (_, cache) = self.attention.forward(&state.features.view(), &e.view());
        self.attention.feature_attribution(&cache)
    }

    /// TD3 regression targets y = r + gamma * min(Q1', Q2') with clipped
    /// noise on the target action.
    fn critic_targets(&self, batch: &[&Transition], rng: &mut ChaCha8Rng) -> Array1<f64> {
        let next_states: Vec<&StateVector> = batch.iter().map(|t| &t.next_state).collect();
        let labels: Vec<StrategyLabel> = batch.iter().map(|t| t.label).collect();
        let (z_next, _, _) = self.batch_z(&next_states, &labels, true);
        let (mut a_next, _) = self.target_actor.forward(&z_next);
        if self.cfg.target_noise_std > 0.0 {
            let normal = Normal::new(0.0, self.cfg.target_noise_std).unwrap();
            let clip = self.cfg.target_noise_clip;
            for v in a_next.iter_mut() {
                let noise = normal.sample(rng).clamp(-clip, clip);
                *v = (*v + noise).clamp(0.0, 1.0);
            }
        }
        let c_in = concat_columns(&z_next, &a_next);
        let (q1, _) = self.target_critic1.forward(&c_in);
        let (q2, _) = self.target_critic2.forward(&c_in);
        Array1::from_shape_fn(batch.len(), |i| {
            batch[i].reward + self.cfg.gamma * q1[(i, 0)].min(q2[(i, 0)])
        })
    }

    /// Critic regression loss and gradients for both critics plus the shared
    /// attention/embedding parameters. Exposed for the finite-difference
    /// checks.
    pub fn critic_loss_and_grads(
        &self,
        batch: &[&Transition],
        targets: &Array1<f64>,
    ) -> CriticGrads {
        let b = batch.len();
        let states: Vec<&StateVector> = batch.iter().map(|t| &t.state).collect();
        let labels: Vec<StrategyLabel> = batch.iter().map(|t| t.label).collect();
        let (z, caches, embeds) = self.batch_z(&states, &labels, false);
        let actions = Array2::from_shape_fn((b, self.cfg.action_dim()), |(i, j)| batch[i].action[j]);
        let c_in = concat_columns(&z, &actions);
        let (q1, cache1) = self.critic1.forward(&c_in);
        let (q2, cache2) = self.critic2.forward(&c_in);

        let mut loss = 0.0;
        let mut dq1 = Array2::zeros((b, 1));
        let mut dq2 = Array2::zeros((b, 1));
        for i in 0..b {
            let e1 = q1[(i, 0)] - targets[i];
            let e2 = q2[(i, 0)] - targets[i];
            loss += (e1 * e1 + e2 * e2) / b as f64;
            dq1[(i, 0)] = 2.0 * e1 / b as f64;
            dq2[(i, 0)] = 2.0 * e2 / b as f64;
        }

        let mut g1 = self.critic1.zero_grad();
        let mut g2 = self.critic2.zero_grad();
        let din1 = self.critic1.backward(&cache1, &dq1, &mut g1);
        let din2 = self.critic2.backward(&cache2, &dq2, &mut g2);
        let z_dim = self.cfg.z_dim();
        let dz = &din1.slice(ndarray::s![.., ..z_dim]) + &din2.slice(ndarray::s![.., ..z_dim]);

        let mut att_grad = self.attention.zero_grad();
        let mut emb_grad = Array2::zeros(self.embedding.table.dim());
        self.backward_z(&states, &labels, &caches, &embeds, &dz, &mut att_grad, &mut emb_grad);

        CriticGrads {
            loss,
            critic1: g1.flatten(),
            critic2: g2.flatten(),
            attention: att_grad.flatten(),
            embedding: emb_grad.iter().copied().collect(),
        }
    }

    /// Deterministic-policy-gradient loss -mean Q1(z, pi(z)) and its
    /// gradients for the actor and the shared attention/embedding. Exposed
    /// for the finite-difference checks.
    pub fn actor_loss_and_grads(&self, batch: &[&Transition]) -> ActorGrads {
        let b = batch.len();
        let states: Vec<&StateVector> = batch.iter().map(|t| &t.state).collect();
        let labels: Vec<StrategyLabel> = batch.iter().map(|t| t.label).collect();
        let (z, caches, embeds) = self.batch_z(&states, &labels, false);
        let (actions, actor_cache) = self.actor.forward(&z);
        let c_in = concat_columns(&z, &actions);
        let (q1, critic_cache) = self.critic1.forward(&c_in);
        let loss = -q1.mean().unwrap();

        let dq1 = Array2::from_elem((b, 1), -1.0 / b as f64);
        // Critic parameters are frozen here; only its input gradient is used.
        let mut scratch = self.critic1.zero_grad();
        let din = self.critic1.backward(&critic_cache, &dq1, &mut scratch);
        let z_dim = self.cfg.z_dim();
        let dz_direct = din.slice(ndarray::s![.., ..z_dim]).to_owned();
        let da = din.slice(ndarray::s![.., z_dim..]).to_owned();

        let mut actor_grad = self.actor.zero_grad();
        let dz_actor = self.actor.backward(&actor_cache, &da, &mut actor_grad);
        let dz = &dz_direct + &dz_actor;

        let mut att_grad = self.attention.zero_grad();
        let mut emb_grad = Array2::zeros(self.embedding.table.dim());
        self.backward_z(&states, &labels, &caches, &embeds, &dz, &mut att_grad, &mut emb_grad);

        ActorGrads {
            loss,
            actor: actor_grad.flatten(),
            attention: att_grad.flatten(),
            embedding: emb_grad.iter().copied().collect(),
        }
    }

    /// One TD3 update from the replay buffer. No-op until the buffer holds a
    /// full batch.
    pub fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut ChaCha8Rng) -> Option<TrainDiag> {
        if buffer.len() < self.cfg.batch_size {
            return None;
        }
        let batch = buffer.sample(self.cfg.batch_size, rng);
        let targets = self.critic_targets(&batch, rng);
        let cg = self.critic_loss_and_grads(&batch, &targets);
        self.opt_critic1.step(&mut self.critic1, &cg.critic1);
        self.opt_critic2.step(&mut self.critic2, &cg.critic2);
        self.opt_attention.step(&mut self.attention, &cg.attention);
        if self.cfg.guided {
            self.opt_embedding.step(&mut self.embedding, &cg.embedding);
        }

        self.update_count += 1;
        let mut actor_loss = None;
        if self.update_count % self.cfg.policy_delay as u64 == 0 {
            let ag = self.actor_loss_and_grads(&batch);
            self.opt_actor.step(&mut self.actor, &ag.actor);
            self.opt_attention.step(&mut self.attention, &ag.attention);
            if self.cfg.guided {
                self.opt_embedding.step(&mut self.embedding, &ag.embedding);
            }
            actor_loss = Some(ag.loss);
            self.sync_targets(self.cfg.tau);
        }
        Some(TrainDiag { critic_loss: cg.loss, actor_loss })
    }

    /// Soft-update all target copies.
    pub fn sync_targets(&mut self, tau: f64) {
        soft_update(&self.actor, &mut self.target_actor, tau);
        soft_update(&self.critic1, &mut self.target_critic1, tau);
        soft_update(&self.critic2, &mut self.target_critic2, tau);
        soft_update(&self.attention, &mut self.target_attention, tau);
        soft_update(&self.embedding, &mut self.target_embedding, tau);
    }

    pub fn target_actor_params(&self) -> Vec<f64> {
        self.target_actor.params()
    }

    /// Serialize all parameters (online and target) with a config hash.
    pub fn checkpoint(&self, config_hash: &str) -> Checkpoint {
        Checkpoint {
            version: 1,
            config_hash: config_hash.to_string(),
            agent_config: self.cfg.clone(),
            actor: self.actor.params(),
            critic1: self.critic1.params(),
            critic2: self.critic2.params(),
            attention: self.attention.params(),
            embedding: self.embedding.params(),
            target_actor: self.target_actor.params(),
            target_critic1: self.target_critic1.params(),
            target_critic2: self.target_critic2.params(),
            target_attention: self.target_attention.params(),
            target_embedding: self.target_embedding.params(),
        }
    }

    /// Restore parameters from a checkpoint (shapes must match the config).
    pub fn restore(&mut self, ckpt: &Checkpoint) -> Result<(), Error> {
        if ckpt.version != 1 {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        if ckpt.actor.len() != self.actor.num_params() {
            return Err(Error::Config("checkpoint shape mismatch".into()));
        }
        self.actor.set_params(&ckpt.actor);
        self.critic1.set_params(&ckpt.critic1);
        self.critic2.set_params(&ckpt.critic2);
        self.attention.set_params(&ckpt.attention);
        self.embedding.set_params(&ckpt.embedding);
        self.target_actor.set_params(&ckpt.target_actor);
        self.target_critic1.set_params(&ckpt.target_critic1);
        self.target_critic2.set_params(&ckpt.target_critic2);
        self.target_attention.set_params(&ckpt.target_attention);
        self.target_embedding.set_params(&ckpt.target_embedding);
        Ok(())
    }
}

/// Versioned parameter dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub agent_config: AgentConfig,
    pub actor: Vec<f64>,
    pub critic1: Vec<f64>,
    pub critic2: Vec<f64>,
    pub attention: Vec<f64>,
    pub embedding: Vec<f64>,
    pub target_actor: Vec<f64>,
    pub target_critic1: Vec<f64>,
    pub target_critic2: Vec<f64>,
    pub target_attention: Vec<f64>,
    pub target_embedding: Vec<f64>,
}

impl Checkpoint {
    pub fn save(&self, path: &std::path::Path) -> Result<(), Error> {
        let text = serde_json::to_string(self)
            .map_err(|e| Error::Config(format!("checkpoint encode: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("checkpoint decode: {e}")))
    }
}

/// Critic-update gradients (flattened in component parameter order).
pub struct CriticGrads {
    pub loss: f64,
    pub critic1: Vec<f64>,
    pub critic2: Vec<f64>,
    pub attention: Vec<f64>,
    pub embedding: Vec<f64>,
}

/// Actor-update gradients.
pub struct ActorGrads {
    pub loss: f64,
    pub actor: Vec<f64>,
    pub attention: Vec<f64>,
    pub embedding: Vec<f64>,
}

fn concat_columns(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("row counts match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use rand::Rng;

    fn small_config(guided: bool) -> AgentConfig {
        let mut cfg = AgentConfig::new(3, guided);
        cfg.d_str = 4;
        cfg.d_h = 8;
        cfg.hidden = 16;
        cfg.batch_size = 8;
        cfg.buffer_capacity = 64;
        cfg
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
        StateVector {
            features: Array2::from_shape_fn((n, crate::env::D_F), |_| rng.random_range(0.0..1.0)),
            global: [
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ],
        }
    }

    fn random_transitions(cfg: &AgentConfig, count: usize, seed: u64) -> Vec<Transition> {
        let mut rng = seeds::rng(seed, &[77]);
        (0..count)
            .map(|i| Transition {
                state: random_state(&mut rng, cfg.num_users),
                action: (0..cfg.action_dim()).map(|_| rng.random_range(0.0..1.0)).collect(),
                reward: rng.random_range(-1.0..2.0),
                next_state: random_state(&mut rng, cfg.num_users),
                label: StrategyLabel::from_index(i % 4),
            })
            .collect()
    }

    fn check_grad(
        agent: &mut Agent,
        component: Component,
        analytic: &[f64],
        loss: &dyn Fn(&Agent) -> f64,
        stride: usize,
    ) {
        let h = 1e-5;
        let mut params = component.params(agent);
        assert_eq!(params.len(), analytic.len());
        for i in (0..params.len()).step_by(stride) {
            let orig = params[i];
            params[i] = orig + h;
            component.set_params(agent, &params);
            let up = loss(agent);
            params[i] = orig - h;
            component.set_params(agent, &params);
            let down = loss(agent);
            params[i] = orig;
            component.set_params(agent, &params);
            let fd = (up - down) / (2.0 * h);
            let scale = fd.abs().max(analytic[i].abs()).max(1e-6);
            assert!(
                (fd - analytic[i]).abs() / scale < 1e-4,
                "{component:?} param {i}: fd {fd} vs analytic {}",
                analytic[i]
            );
        }
    }

    #[derive(Debug, Clone, Copy)]
    enum Component {
        Critic1,
        Critic2,
        Actor,
        Attention,
        Embedding,
    }

    impl Component {
        fn params(self, a: &Agent) -> Vec<f64> {
            match self {
                Component::Critic1 => a.critic1.params(),
                Component::Critic2 => a.critic2.params(),
                Component::Actor => a.actor.params(),
                Component::Attention => a.attention.params(),
                Component::Embedding => a.embedding.params(),
            }
        }

        fn set_params(self, a: &mut Agent, p: &[f64]) {
            match self {
                Component::Critic1 => a.critic1.set_params(p),
                Component::Critic2 => a.critic2.set_params(p),
                Component::Actor => a.actor.set_params(p),
                Component::Attention => a.attention.set_params(p),
                Component::Embedding => a.embedding.set_params(p),
            }
        }
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        let cfg = small_config(true);
        let mut agent = Agent::new(cfg.clone(), 11);
        let transitions = random_transitions(&cfg, 8, 12);
        let batch: Vec<&Transition> = transitions.iter().collect();
        let targets = Array1::from_shape_fn(8, |i| 0.3 * i as f64 - 1.0);
        let grads = agent.critic_loss_and_grads(&batch, &targets);
        let loss = {
            let transitions = transitions.clone();
            let targets = targets.clone();
            move |a: &Agent| {
                let b: Vec<&Transition> = transitions.iter().collect();
                a.critic_loss_and_grads(&b, &targets).loss
            }
        };
        check_grad(&mut agent, Component::Critic1, &grads.critic1, &loss, 13);
        check_grad(&mut agent, Component::Critic2, &grads.critic2, &loss, 13);
        check_grad(&mut agent, Component::Attention, &grads.attention, &loss, 5);
        check_grad(&mut agent, Component::Embedding, &grads.embedding, &loss, 1);
    }

    #[test]
    fn actor_gradients_match_finite_differences() {
        let cfg = small_config(true);
        let mut agent = Agent::new(cfg.clone(), 21);
        let transitions = random_transitions(&cfg, 8, 22);
        let batch: Vec<&Transition> = transitions.iter().collect();
        let grads = agent.actor_loss_and_grads(&batch);
        let loss = {
            let transitions = transitions.clone();
            move |a: &Agent| {
                let b: Vec<&Transition> = transitions.iter().collect();
                a.actor_loss_and_grads(&b).loss
            }
        };
        check_grad(&mut agent, Component::Actor, &grads.actor, &loss, 17);
        check_grad(&mut agent, Component::Attention, &grads.attention, &loss, 5);
        check_grad(&mut agent, Component::Embedding, &grads.embedding, &loss, 1);
    }

    #[test]
    fn critic_regresses_fixed_rewards_with_zero_discount() {
        // gamma = 0 disables bootstrapping, so the critic loss must shrink
        // toward a pure regression fit of the rewards.
        let mut cfg = small_config(true);
        cfg.gamma = 0.0;
        cfg.batch_size = 16;
        let mut agent = Agent::new(cfg.clone(), 31);
        let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
        for t in random_transitions(&cfg, 32, 32) {
            buffer.push(t);
        }
        let mut rng = seeds::rng(33, &[seeds::stream::REPLAY]);
        let mut first = None;
        let mut last = 0.0;
        for _ in 0..6000 {
            let diag = agent.train_step(&buffer, &mut rng).unwrap();
            first.get_or_insert(diag.critic_loss);
            last = diag.critic_loss;
        }
        assert!(last < 1e-3, "critic loss stalled at {last}");
        assert!(last < first.unwrap());
    }

    #[test]
    fn tau_one_sync_copies_online_to_target() {
        let cfg = small_config(true);
        let mut agent = Agent::new(cfg, 41);
        let p: Vec<f64> = agent.actor.params().iter().map(|v| v + 0.25).collect();
        agent.actor.set_params(&p);
        agent.sync_targets(1.0);
        assert_eq!(agent.actor.params(), agent.target_actor_params());
    }

    #[test]
    fn unguided_agent_ignores_the_strategy_label() {
        let cfg = small_config(false);
        let agent = Agent::new(cfg.clone(), 51);
        let mut rng = seeds::rng(52, &[1]);
        let state = random_state(&mut rng, cfg.num_users);
        let mut noise = seeds::rng(0, &[0]);
        let a = agent.act(&state, StrategyLabel::A, 0.0, &mut noise);
        let b = agent.act(&state, StrategyLabel::D, 0.0, &mut noise);
        assert_eq!(a, b);
    }

    #[test]
    fn guided_agent_conditions_on_the_strategy_label() {
        let cfg = small_config(true);
        let agent = Agent::new(cfg.clone(), 61);
        let mut rng = seeds::rng(62, &[1]);
        let state = random_state(&mut rng, cfg.num_users);
        let mut noise = seeds::rng(0, &[0]);
        let a = agent.act(&state, StrategyLabel::A, 0.0, &mut noise);
        let b = agent.act(&state, StrategyLabel::D, 0.0, &mut noise);
        assert_ne!(a, b);
    }

    #[test]
    fn actions_stay_in_unit_interval_under_noise() {
        let cfg = small_config(true);
        let agent = Agent::new(cfg.clone(), 71);
        let mut rng = seeds::rng(72, &[1]);
        let state = random_state(&mut rng, cfg.num_users);
        let mut noise = seeds::rng(73, &[stream::EXPLORATION]);
        for _ in 0..50 {
            let a = agent.act(&state, StrategyLabel::B, 0.4, &mut noise);
            assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn checkpoint_round_trip_restores_behavior() {
        let cfg = small_config(true);
        let mut agent = Agent::new(cfg.clone(), 81);
        let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
        for t in random_transitions(&cfg, 16, 82) {
            buffer.push(t);
        }
        let mut rng = seeds::rng(83, &[seeds::stream::REPLAY]);
        for _ in 0..20 {
            agent.train_step(&buffer, &mut rng);
        }
        let ckpt = agent.checkpoint("test-config");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.json");
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.config_hash, "test-config");

        let mut fresh = Agent::new(cfg.clone(), 999);
        fresh.restore(&loaded).unwrap();
        let mut srng = seeds::rng(84, &[1]);
        let state = random_state(&mut srng, cfg.num_users);
        let mut n1 = seeds::rng(0, &[0]);
        let mut n2 = seeds::rng(0, &[0]);
        let a = agent.act(&state, StrategyLabel::C, 0.0, &mut n1);
        let b = fresh.act(&state, StrategyLabel::C, 0.0, &mut n2);
        assert_eq!(a, b);
    }
}
