//! Attention tensors and a small differentiable attention source.
//!
//! [`SyntheticLatent`] stands in for a denoiser: a latent `x` of shape
//! `(H'·W') × d` is projected to queries `Q = x·W_q`; cross-attention is
//! `σ(β·Q·Kᵀ/√d)` against fixed token keys and self-attention is the
//! row-softmax of `Q·Qᵀ/√d`. Only `x` is optimized.

use ndarray::{Array, Array2, Array3, ArrayView2, Dimension};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::PROJECTION_SEED;
use crate::error::{Error, Result};
use crate::exec;

/// Cross-attention maps per token plus an optional self-attention map.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionStack {
    /// `(H'·W') × n`, column `t` is the flattened map of token `t`.
    pub cross: Array2<f64>,
    /// `(H'·W') × H' × W'`, slice `s` is where location `s` attends.
    pub self_attn: Option<Array3<f64>>,
    pub dims: (usize, usize),
}

impl AttentionStack {
    pub fn new(
        cross: Array2<f64>,
        self_attn: Option<Array3<f64>>,
        dims: (usize, usize),
    ) -> Result<Self> {
        let hw = dims.0 * dims.1;
        if hw == 0 || cross.nrows() != hw {
            return Err(Error::Shape(format!(
                "cross attention has {} rows, expected {hw} for {}x{}",
                cross.nrows(),
                dims.0,
                dims.1
            )));
        }
        if let Some(s) = &self_attn {
            if s.dim() != (hw, dims.0, dims.1) {
                return Err(Error::Shape(format!(
                    "self attention is {:?}, expected ({hw}, {}, {})",
                    s.dim(),
                    dims.0,
                    dims.1
                )));
            }
        }
        let in_range = |v: &f64| (0.0..=1.0).contains(v);
        if !cross.iter().all(in_range) || !self_attn.iter().flat_map(|s| s.iter()).all(in_range) {
            return Err(Error::Validation(
                "attention values must lie in [0, 1]".into(),
            ));
        }
        Ok(AttentionStack {
            cross,
            self_attn,
            dims,
        })
    }

    pub fn tokens(&self) -> usize {
        self.cross.ncols()
    }

    /// Map of one token as an `H' × W'` array.
    pub fn token_map(&self, token: usize) -> Array2<f64> {
        self.cross
            .column(token)
            .to_owned()
            .into_shape(self.dims)
            .expect("column length is H'·W'")
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Elementwise `σ(β·score)`; tokens are not normalized against each other.
pub fn sigmoid_attention(scores: &Array2<f64>, beta: f64) -> Array2<f64> {
    scores.mapv(|s| sigmoid(beta * s))
}

fn row_softmax(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLatent {
    /// `(H'·W') × d`, the optimized state.
    pub x: Array2<f64>,
    /// `d × d`, frozen.
    pub w_q: Array2<f64>,
    /// `n × d`, frozen.
    pub keys: Array2<f64>,
    pub dims: (usize, usize),
}

impl SyntheticLatent {
    /// Latent drawn from N(0, 1) with `seed`; projection and keys from the
    /// fixed [`PROJECTION_SEED`], scaled by `1/√d`.
    pub fn new(dims: (usize, usize), tokens: usize, d: usize, seed: u64) -> Self {
        let hw = dims.0 * dims.1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((hw, d), || StandardNormal.sample(&mut rng));
        let mut frozen = ChaCha8Rng::seed_from_u64(PROJECTION_SEED);
        let scale = 1.0 / (d as f64).sqrt();
        let w_q = Array2::from_shape_simple_fn((d, d), || {
            let v: f64 = StandardNormal.sample(&mut frozen);
            v * scale
        });
        let keys = Array2::from_shape_simple_fn((tokens, d), || {
            let v: f64 = StandardNormal.sample(&mut frozen);
            v * scale
        });
        SyntheticLatent { x, w_q, keys, dims }
    }

    pub fn latent_dim(&self) -> usize {
        self.w_q.nrows()
    }

    fn queries(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w_q)
    }

    /// Attention stack for the current latent.
    pub fn forward(&self, beta: f64) -> AttentionStack {
        self.forward_at(&self.x.view(), beta)
    }

    /// Attention stack for an arbitrary latent value with this latent's
    /// frozen projection and keys.
    pub fn forward_at(&self, x: &ArrayView2<f64>, beta: f64) -> AttentionStack {
        let (h, w) = self.dims;
        let scale = 1.0 / (self.latent_dim() as f64).sqrt();
        let q = self.queries(x);
        let scores = q.dot(&self.keys.t()) * scale;
        let cross = sigmoid_attention(&scores, beta);
        let mut logits = q.dot(&q.t()) * scale;
        row_softmax(&mut logits);
        let self_attn = logits
            .into_shape((h * w, h, w))
            .expect("square logits reshape to slices");
        AttentionStack {
            cross,
            self_attn: Some(self_attn),
            dims: self.dims,
        }
    }

    /// Chain upstream attention gradients back to `x`.
    pub fn latent_gradient(
        &self,
        beta: f64,
        d_cross: &Array2<f64>,
        d_self: Option<&Array3<f64>>,
    ) -> Array2<f64> {
        self.latent_gradient_at(&self.x.view(), beta, d_cross, d_self)
    }

    pub fn latent_gradient_at(
        &self,
        x: &ArrayView2<f64>,
        beta: f64,
        d_cross: &Array2<f64>,
        d_self: Option<&Array3<f64>>,
    ) -> Array2<f64> {
        let scale = 1.0 / (self.latent_dim() as f64).sqrt();
        let q = self.queries(x);
        let scores = q.dot(&self.keys.t()) * scale;

        // dσ(βs)/ds = β·σ(βs)·σ(-βs)
        let mut d_scores = d_cross.clone();
        d_scores.zip_mut_with(&scores, |g, &s| {
            *g *= beta * sigmoid(beta * s) * sigmoid(-beta * s)
        });
        let mut d_q = d_scores.dot(&self.keys) * scale;

        if let Some(d_self) = d_self {
            let hw = q.nrows();
            let mut probs = q.dot(&q.t()) * scale;
            row_softmax(&mut probs);
            let upstream = d_self
                .view()
                .into_shape((hw, hw))
                .expect("self gradient has H'·W' slices");
            let mut d_logits = Array2::<f64>::zeros((hw, hw));
            for ((mut out, p), g) in d_logits
                .rows_mut()
                .into_iter()
                .zip(probs.rows())
                .zip(upstream.rows())
            {
                let inner: f64 = p.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
                out.iter_mut()
                    .zip(p.iter().zip(g.iter()))
                    .for_each(|(o, (&pv, &gv))| *o = pv * (gv - inner));
            }
            let sym = &d_logits + &d_logits.t();
            d_q = d_q + sym.dot(&q) * scale;
        }
        d_q.dot(&self.w_q.t())
    }
}

/// Result of comparing an analytic gradient against central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// `max |analytic − numeric| / (|numeric| + 1e-8)`.
    pub max_deviation: f64,
    /// Flat index of the worst entry.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub entries_checked: usize,
}

/// Compare `analytic` against central finite differences of `value` at
/// `point`, entry by entry.
pub fn grad_check<D, F>(
    value: F,
    analytic: &Array<f64, D>,
    point: &Array<f64, D>,
    epsilon: f64,
) -> GradCheckReport
where
    D: Dimension,
    F: Fn(&Array<f64, D>) -> f64 + Sync + Send,
{
    let all: Vec<usize> = (0..point.len()).collect();
    grad_check_entries(value, analytic, point, epsilon, &all)
}

/// Like [`grad_check`], restricted to the given flat (row-major) indices.
pub fn grad_check_entries<D, F>(
    value: F,
    analytic: &Array<f64, D>,
    point: &Array<f64, D>,
    epsilon: f64,
    indices: &[usize],
) -> GradCheckReport
where
    D: Dimension,
    F: Fn(&Array<f64, D>) -> f64 + Sync + Send,
{
    assert_eq!(
        analytic.shape(),
        point.shape(),
        "gradient and point shapes differ"
    );
    let base = point.as_standard_layout().into_owned();
    let grad = analytic.as_standard_layout().into_owned();
    let grad_flat = grad.as_slice().expect("standard layout");

    let results = exec::map_slice(indices, |&k| {
        let mut probe = base.clone();
        let orig = probe.as_slice().unwrap()[k];
        probe.as_slice_mut().unwrap()[k] = orig + epsilon;
        let plus = value(&probe);
        probe.as_slice_mut().unwrap()[k] = orig - epsilon;
        let minus = value(&probe);
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = grad_flat[k];
        ((a - numeric).abs() / (numeric.abs() + 1e-8), k, a, numeric)
    });

    let mut report = GradCheckReport {
        max_deviation: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        entries_checked: indices.len(),
    };
    for (dev, k, a, n) in results {
        if dev > report.max_deviation || dev.is_nan() {
            report = GradCheckReport {
                max_deviation: dev,
                worst_index: k,
                analytic: a,
                numeric: n,
                entries_checked: indices.len(),
            };
        }
    }
    report
}
