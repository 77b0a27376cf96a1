//! Minimal dense-network building blocks with exact reverse-mode gradients
//! for the fixed two-hidden-layer architecture. No general autodiff; the
//! finite-difference tests in `td3` guard correctness.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Anything whose parameters can be flattened into a single vector. The
/// flat order is the contract for optimizers, soft target updates,
/// checkpoints, and finite-difference probes.
pub trait ParamVec {
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, data: &[f64]);
}

/// Soft update: target <- tau * online + (1 - tau) * target.
pub fn soft_update<T: ParamVec>(online: &T, target: &mut T, tau: f64) {
    let o = online.params();
    let mut t = target.params();
    for (ti, oi) in t.iter_mut().zip(&o) {
        *ti = tau * oi + (1.0 - tau) * *ti;
    }
    target.set_params(&t);
}

/// Fully connected layer y = x W^T + b.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Self {
            w: Array2::from_shape_fn((out_dim, in_dim), |_| rng.random_range(-bound..bound)),
            b: Array1::from_shape_fn(out_dim, |_| rng.random_range(-bound..bound)),
        }
    }

    pub fn zeros_like(&self) -> Linear {
        Linear {
            w: Array2::zeros(self.w.dim()),
            b: Array1::zeros(self.b.len()),
        }
    }

    /// Batched forward: x is B x in, result B x out.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    /// Accumulate parameter gradients and return the input gradient.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        grad.w += &dy.t().dot(x);
        grad.b += &dy.sum_axis(ndarray::Axis(0));
        dy.dot(&self.w)
    }
}

impl ParamVec for Linear {
    fn num_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    fn params(&self) -> Vec<f64> {
        self.w.iter().chain(self.b.iter()).copied().collect()
    }

    fn set_params(&mut self, data: &[f64]) {
        assert_eq!(data.len(), self.num_params());
        let nw = self.w.len();
        for (dst, src) in self.w.iter_mut().zip(&data[..nw]) {
            *dst = *src;
        }
        for (dst, src) in self.b.iter_mut().zip(&data[nw..]) {
            *dst = *src;
        }
    }
}

/// Output stage of an [`Mlp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    /// Logistic squashing into (0, 1); used by the actor.
    Sigmoid,
    /// Raw linear output; used by the critics.
    Identity,
}

fn relu(x: &mut Array2<f64>) {
    x.mapv_inplace(|v| v.max(0.0));
}

fn sigmoid(x: &mut Array2<f64>) {
    x.mapv_inplace(|v| 1.0 / (1.0 + (-v).exp()));
}

/// Two hidden rectified-linear layers plus a configurable output stage.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub l1: Linear,
    pub l2: Linear,
    pub l3: Linear,
    pub out_act: OutputActivation,
}

/// Post-activation values cached by [`Mlp::forward`].
pub struct MlpCache {
    pub x: Array2<f64>,
    pub h1: Array2<f64>,
    pub h2: Array2<f64>,
    pub y: Array2<f64>,
}

/// Gradient accumulator with the same shapes as the network.
#[derive(Debug, Clone)]
pub struct MlpGrad {
    pub l1: Linear,
    pub l2: Linear,
    pub l3: Linear,
}

impl Mlp {
    pub fn new(
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        out_act: OutputActivation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self {
            l1: Linear::new(in_dim, hidden, rng),
            l2: Linear::new(hidden, hidden, rng),
            l3: Linear::new(hidden, out_dim, rng),
            out_act,
        }
    }

    pub fn zero_grad(&self) -> MlpGrad {
        MlpGrad {
            l1: self.l1.zeros_like(),
            l2: self.l2.zeros_like(),
            l3: self.l3.zeros_like(),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, MlpCache) {
        let mut h1 = self.l1.forward(x);
        relu(&mut h1);
        let mut h2 = self.l2.forward(&h1);
        relu(&mut h2);
        let mut y = self.l3.forward(&h2);
        if self.out_act == OutputActivation::Sigmoid {
            sigmoid(&mut y);
        }
        let cache = MlpCache {
            x: x.clone(),
            h1,
            h2,
            y: y.clone(),
        };
        (y, cache)
    }

    /// Backprop `dy` through the cached forward pass; accumulates parameter
    /// gradients into `grad` and returns the gradient w.r.t. the input.
    pub fn backward(&self, cache: &MlpCache, dy: &Array2<f64>, grad: &mut MlpGrad) -> Array2<f64> {
        let dy3 = match self.out_act {
            OutputActivation::Sigmoid => dy * &(&cache.y * &cache.y.mapv(|v| 1.0 - v)),
            OutputActivation::Identity => dy.clone(),
        };
        let mut dh2 = self.l3.backward(&cache.h2, &dy3, &mut grad.l3);
        dh2.zip_mut_with(&cache.h2, |d, h| {
            if *h <= 0.0 {
                *d = 0.0;
            }
        });
        let mut dh1 = self.l2.backward(&cache.h1, &dh2, &mut grad.l2);
        dh1.zip_mut_with(&cache.h1, |d, h| {
            if *h <= 0.0 {
                *d = 0.0;
            }
        });
        self.l1.backward(&cache.x, &dh1, &mut grad.l1)
    }
}

impl ParamVec for Mlp {
    fn num_params(&self) -> usize {
        self.l1.num_params() + self.l2.num_params() + self.l3.num_params()
    }

    fn params(&self) -> Vec<f64> {
        let mut out = self.l1.params();
        out.extend(self.l2.params());
        out.extend(self.l3.params());
        out
    }

    fn set_params(&mut self, data: &[f64]) {
        let (n1, n2) = (self.l1.num_params(), self.l2.num_params());
        self.l1.set_params(&data[..n1]);
        self.l2.set_params(&data[n1..n1 + n2]);
        self.l3.set_params(&data[n1 + n2..]);
    }
}

impl MlpGrad {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.l1.params();
        out.extend(self.l2.params());
        out.extend(self.l3.params());
        out
    }
}

/// Adaptive-moment gradient descent over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, num_params: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    /// One descent step on a component, given its accumulated gradient.
    pub fn step<T: ParamVec>(&mut self, component: &mut T, grad: &[f64]) {
        let mut p = component.params();
        assert_eq!(p.len(), grad.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..p.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        component.set_params(&p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use ndarray::array;

    #[test]
    fn linear_forward_matches_hand_computation() {
        let l = Linear {
            w: array![[1.0, 2.0], [0.0, -1.0]],
            b: array![0.5, 0.0],
        };
        let x = array![[1.0, 1.0]];
        let y = l.forward(&x);
        assert_eq!(y, array![[3.5, -1.0]]);
    }

    #[test]
    fn param_round_trip() {
        let mut rng = seeds::rng(2, &[seeds::stream::NETWORK_INIT]);
        let mut mlp = Mlp::new(4, 8, 3, OutputActivation::Sigmoid, &mut rng);
        let p = mlp.params();
        assert_eq!(p.len(), mlp.num_params());
        let mut scaled: Vec<f64> = p.iter().map(|v| v * 2.0).collect();
        mlp.set_params(&scaled);
        scaled.iter_mut().for_each(|v| *v /= 2.0);
        mlp.set_params(&scaled);
        assert_eq!(mlp.params(), p);
    }

    #[test]
    fn sigmoid_outputs_in_unit_interval() {
        let mut rng = seeds::rng(3, &[seeds::stream::NETWORK_INIT]);
        let mlp = Mlp::new(5, 16, 4, OutputActivation::Sigmoid, &mut rng);
        let x = Array2::from_shape_fn((7, 5), |_| 10.0);
        let (y, _) = mlp.forward(&x);
        assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn mlp_gradient_matches_finite_differences() {
        let mut rng = seeds::rng(4, &[seeds::stream::NETWORK_INIT]);
        let mut mlp = Mlp::new(3, 6, 2, OutputActivation::Sigmoid, &mut rng);
        let x = Array2::from_shape_fn((4, 3), |(i, j)| 0.1 * (i as f64 - j as f64));
        // Loss: sum of squared outputs.
        let loss = |m: &Mlp| {
            let (y, _) = m.forward(&x);
            y.iter().map(|v| v * v).sum::<f64>()
        };
        let (y, cache) = mlp.forward(&x);
        let mut grad = mlp.zero_grad();
        mlp.backward(&cache, &(2.0 * &y), &mut grad);
        let flat = grad.flatten();

        let mut params = mlp.params();
        let h = 1e-6;
        for i in (0..params.len()).step_by(7) {
            let orig = params[i];
            params[i] = orig + h;
            mlp.set_params(&params);
            let up = loss(&mlp);
            params[i] = orig - h;
            mlp.set_params(&params);
            let down = loss(&mlp);
            params[i] = orig;
            mlp.set_params(&params);
            let fd = (up - down) / (2.0 * h);
            let scale = fd.abs().max(flat[i].abs()).max(1e-8);
            assert!(
                (fd - flat[i]).abs() / scale < 1e-4,
                "param {i}: fd {fd} vs analytic {}",
                flat[i]
            );
        }
    }

    #[test]
    fn soft_update_tau_one_copies() {
        let mut rng = seeds::rng(5, &[seeds::stream::NETWORK_INIT]);
        let online = Mlp::new(3, 4, 2, OutputActivation::Identity, &mut rng);
        let mut target = Mlp::new(3, 4, 2, OutputActivation::Identity, &mut rng);
        soft_update(&online, &mut target, 1.0);
        assert_eq!(online.params(), target.params());
    }

    #[test]
    fn adam_descends_a_quadratic() {
        #[derive(Clone)]
        struct Scalar(f64);
        impl ParamVec for Scalar {
            fn num_params(&self) -> usize {
                1
            }
            fn params(&self) -> Vec<f64> {
                vec![self.0]
            }
            fn set_params(&mut self, d: &[f64]) {
                self.0 = d[0];
            }
        }
        let mut x = Scalar(5.0);
        let mut opt = Adam::new(0.1, 1);
        for _ in 0..500 {
            let g = 2.0 * x.0;
            opt.step(&mut x, &[g]);
        }
        assert!(x.0.abs() < 1e-2);
    }
}
