//! Strategy-conditioned additive attention over per-user feature vectors:
//! scores v^T tanh(W_x x_u + W_e e), softmax weights, and a context vector
//! built as the weight-convex combination of the raw features.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use super::nn::{Linear, ParamVec};

/// Number of logged feature categories: latitude, longitude, distance, path
/// loss, region, previous rate, previous SINR.
pub const FEATURE_CATEGORIES: usize = 7;
pub const FEATURE_CATEGORY_NAMES: [&str; FEATURE_CATEGORIES] = [
    "latitude",
    "longitude",
    "distance",
    "path_loss",
    "region",
    "prev_rate",
    "prev_sinr",
];

/// Additive attention parameters.
#[derive(Debug, Clone)]
pub struct AttentionLayer {
    /// d_h x d_f feature projection.
    pub w_x: Array2<f64>,
    /// d_h x d_str embedding projection.
    pub w_e: Array2<f64>,
    /// d_h score vector.
    pub v: Array1<f64>,
}

/// Intermediate values cached by the forward pass.
pub struct AttentionCache {
    /// N_u x d_h tanh activations.
    pub h: Array2<f64>,
    /// Softmax weights over users.
    pub weights: Array1<f64>,
}

/// Gradient accumulator mirroring [`AttentionLayer`].
#[derive(Debug, Clone)]
pub struct AttentionGrad {
    pub w_x: Array2<f64>,
    pub w_e: Array2<f64>,
    pub v: Array1<f64>,
}

impl AttentionLayer {
    pub fn new(d_h: usize, d_f: usize, d_str: usize, rng: &mut ChaCha8Rng) -> Self {
        // Reuse the fan-in init of the dense layers.
        let wx = Linear::new(d_f, d_h, rng);
        let we = Linear::new(d_str, d_h, rng);
        let v = Linear::new(d_h, 1, rng);
        Self {
            w_x: wx.w,
            w_e: we.w,
            v: v.w.row(0).to_owned(),
        }
    }

    pub fn d_h(&self) -> usize {
        self.v.len()
    }

    pub fn zero_grad(&self) -> AttentionGrad {
        AttentionGrad {
            w_x: Array2::zeros(self.w_x.dim()),
            w_e: Array2::zeros(self.w_e.dim()),
            v: Array1::zeros(self.v.len()),
        }
    }

    /// Context vector and simplex weights for one set of user features.
    pub fn forward(
        &self,
        features: &ArrayView2<f64>,
        e_sigma: &ArrayView1<f64>,
    ) -> (Array1<f64>, AttentionCache) {
        let bias = self.w_e.dot(e_sigma);
        let mut pre = features.dot(&self.w_x.t());
        pre += &bias;
        let h = pre.mapv(f64::tanh);
        let scores = h.dot(&self.v);
        let weights = softmax(&scores);
        let context = features.t().dot(&weights);
        (context, AttentionCache { h, weights })
    }

    /// Backprop the context gradient; accumulates parameter gradients and
    /// returns the gradient w.r.t. the strategy embedding.
    ///
    /// Softmax Jacobian: da_u = w_u (dw_u - sum_j w_j dw_j); tanh backward
    /// dpre = dh * (1 - h^2).
    pub fn backward_with_embedding(
        &self,
        features: &ArrayView2<f64>,
        e_sigma: &ArrayView1<f64>,
        cache: &AttentionCache,
        d_context: &ArrayView1<f64>,
        grad: &mut AttentionGrad,
    ) -> Array1<f64> {
        let w = &cache.weights;
        let dw = features.dot(d_context);
        let mixed = w.dot(&dw);
        let da = w * &(&dw - mixed);
        grad.v += &cache.h.t().dot(&da);
        let dh = outer(&da, &self.v.view());
        let dpre = &dh * &cache.h.mapv(|t| 1.0 - t * t);
        grad.w_x += &dpre.t().dot(features);
        let dpre_sum = dpre.sum_axis(Axis(0));
        grad.w_e += &outer(&dpre_sum, e_sigma);
        self.w_e.t().dot(&dpre_sum)
    }

    /// Mean per-feature-category attribution of the attention scores:
    /// the weight-averaged magnitude of d score / d feature, with the three
    /// region one-hot columns pooled, normalized to sum to one.
    pub fn feature_attribution(&self, cache: &AttentionCache) -> [f64; FEATURE_CATEGORIES] {
        let n = cache.h.nrows();
        let d_f = self.w_x.ncols();
        let mut per_column = vec![0.0f64; d_f];
        for u in 0..n {
            let wu = cache.weights[u];
            for f in 0..d_f {
                let mut sens = 0.0;
                for k in 0..self.v.len() {
                    let t = cache.h[(u, k)];
                    sens += self.v[k] * (1.0 - t * t) * self.w_x[(k, f)];
                }
                per_column[f] += wu * sens.abs();
            }
        }
        // Columns: lat, lon, dist, loss, region one-hot (3), rate, sinr.
        let mut cat = [
            per_column[0],
            per_column[1],
            per_column[2],
            per_column[3],
            per_column[4] + per_column[5] + per_column[6],
            per_column[7],
            per_column[8],
        ];
        let total: f64 = cat.iter().sum();
        if total > 0.0 {
            cat.iter_mut().for_each(|c| *c /= total);
        }
        cat
    }
}

impl ParamVec for AttentionLayer {
    fn num_params(&self) -> usize {
        self.w_x.len() + self.w_e.len() + self.v.len()
    }

    fn params(&self) -> Vec<f64> {
        self.w_x
            .iter()
            .chain(self.w_e.iter())
            .chain(self.v.iter())
            .copied()
            .collect()
    }

    fn set_params(&mut self, data: &[f64]) {
        assert_eq!(data.len(), self.num_params());
        let (nx, ne) = (self.w_x.len(), self.w_e.len());
        for (dst, src) in self.w_x.iter_mut().zip(&data[..nx]) {
            *dst = *src;
        }
        for (dst, src) in self.w_e.iter_mut().zip(&data[nx..nx + ne]) {
            *dst = *src;
        }
        for (dst, src) in self.v.iter_mut().zip(&data[nx + ne..]) {
            *dst = *src;
        }
    }
}

impl AttentionGrad {
    pub fn flatten(&self) -> Vec<f64> {
        self.w_x
            .iter()
            .chain(self.w_e.iter())
            .chain(self.v.iter())
            .copied()
            .collect()
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(scores: &Array1<f64>) -> Array1<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp = scores.mapv(|s| (s - max).exp());
    let sum = exp.sum();
    exp / sum
}

fn outer(a: &Array1<f64>, b: &ArrayView1<f64>) -> Array2<f64> {
    let (n, m) = (a.len(), b.len());
    Array2::from_shape_fn((n, m), |(i, j)| a[i] * b[j])
}
