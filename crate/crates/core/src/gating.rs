//! Gating functions that assign input-dependent kernel weights, and the
//! gradient of the dual objective with respect to their parameters.
//!
//! Three families are supported:
//!
//! * softmax: `eta_m(x) = exp(v_m . x + v_m0) / sum_k exp(v_k . x + v_k0)`
//! * sigmoid: `eta_m(x) = 1 / (1 + exp(-(v_m . x + v_m0)))`
//! * rbf: `eta_m(x) = exp(-|x - mu_m|^2 / s_m^2) / sum_k exp(-|x - mu_k|^2 / s_k^2)`
//!
//! All outputs are non-negative, which keeps the locally combined kernel
//! positive semidefinite.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::gaussian_bandwidth;

/// Half-width of the uniform range used to initialize softmax and sigmoid
/// parameters.
pub const INIT_RANGE: f64 = 0.1;

/// Smallest spread an RBF gate is allowed to take after a gradient step.
const MIN_SPREAD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatingKind {
    Softmax,
    Sigmoid,
    Rbf,
}

impl GatingKind {
    /// Tag used in classifier names: `So`, `S` or `R`.
    pub fn tag(&self) -> &'static str {
        match self {
            GatingKind::Softmax => "So",
            GatingKind::Sigmoid => "S",
            GatingKind::Rbf => "R",
        }
    }
}

impl FromStr for GatingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(GatingKind::Softmax),
            "sigmoid" => Ok(GatingKind::Sigmoid),
            "rbf" => Ok(GatingKind::Rbf),
            other => Err(Error::InvalidGating(format!("unknown gating kind {other:?}"))),
        }
    }
}

impl fmt::Display for GatingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GatingKind::Softmax => "softmax",
            GatingKind::Sigmoid => "sigmoid",
            GatingKind::Rbf => "rbf",
        })
    }
}

/// Parameters of one gating function over `p` kernels and `d` features.
///
/// For softmax and sigmoid, row `m` of `rows` is `v_m` and `scalars[m]` is
/// the offset `v_m0`. For rbf, row `m` is the center `mu_m` and `scalars[m]`
/// the spread `s_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingParams {
    pub kind: GatingKind,
    pub rows: Array2<f64>,
    pub scalars: Array1<f64>,
}

/// Gradient of the dual objective, shaped like [`GatingParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GateGradient {
    pub rows: Array2<f64>,
    pub scalars: Array1<f64>,
}

impl GateGradient {
    pub fn is_finite(&self) -> bool {
        self.rows.iter().chain(self.scalars.iter()).all(|v| v.is_finite())
    }
}

impl GatingParams {
    pub fn new(kind: GatingKind, rows: Array2<f64>, scalars: Array1<f64>) -> Result<Self> {
        let params = Self { kind, rows, scalars };
        params.validate()?;
        Ok(params)
    }

    /// Softmax gate with all-zero parameters: `eta_m = 1/p` everywhere.
    pub fn uniform_softmax(p: usize, d: usize) -> Self {
        Self {
            kind: GatingKind::Softmax,
            rows: Array2::zeros((p, d)),
            scalars: Array1::zeros(p),
        }
    }

    pub fn n_kernels(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.nrows() == 0 {
            return Err(Error::InvalidGating("need at least one kernel".into()));
        }
        if self.scalars.len() != self.rows.nrows() {
            return Err(Error::InvalidGating(format!(
                "{} rows but {} scalars",
                self.rows.nrows(),
                self.scalars.len()
            )));
        }
        if self.kind == GatingKind::Rbf && self.scalars.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidGating("rbf spreads must be positive".into()));
        }
        Ok(())
    }

    /// Gate values for one input.
    pub fn eval(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.validate()?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        match self.kind {
            GatingKind::Softmax => softmax(self.rows.dot(&x) + &self.scalars),
            GatingKind::Sigmoid => (self.rows.dot(&x) + &self.scalars).mapv(sigmoid),
            GatingKind::Rbf => {
                let logits = Array1::from_shape_fn(self.n_kernels(), |m| {
                    let s = self.scalars[m];
                    -sq_dist(x, self.rows.row(m)) / (s * s)
                });
                softmax(logits)
            }
        }
    }

    /// Gate matrix `H` with `H[i, m] = eta_m(x_i)`.
    pub fn eval_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.validate()?;
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let mut h = Array2::zeros((x.nrows(), self.n_kernels()));
        for (i, mut row) in h.axis_iter_mut(Axis(0)).enumerate() {
            row.assign(&self.eval_unchecked(x.row(i)));
        }
        Ok(h)
    }

    /// `self - step * grad`. RBF spreads enter only squared, so a spread that
    /// crosses zero is reflected and floored to stay positive.
    pub fn descend(&self, grad: &GateGradient, step: f64) -> Self {
        let mut next = self.clone();
        next.rows.scaled_add(-step, &grad.rows);
        next.scalars.scaled_add(-step, &grad.scalars);
        if next.kind == GatingKind::Rbf {
            next.scalars.mapv_inplace(|s| s.abs().max(MIN_SPREAD));
        }
        next
    }
}

pub fn gate_eval(params: &GatingParams, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    params.eval(x)
}

pub fn gate_eval_batch(params: &GatingParams, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    params.eval_batch(x)
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

fn softmax(mut logits: Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logits.mapv_inplace(|a| (a - max).exp());
    let total = logits.sum();
    logits / total
}

/// Gradient of `J = -1/2 a^T Q(eta) a` with respect to the gating parameters,
/// holding `alpha` fixed, where
/// `Q(eta)[i, j] = sum_m eta_m(x_i) K_m[i, j] eta_m(x_j)`.
///
/// Writing `c^k_ij = a_i a_j eta_k(x_i) K_k[i, j] eta_k(x_j)`, every family's
/// double sum is separable in `i` and `j`, so it is evaluated through the
/// per-sample sums `r^k_i = (sum_j c^k_ij + sum_j c^k_ji) / 2` in `O(p N^2)`.
pub fn gate_gradient(
    params: &GatingParams,
    alpha: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    per_kernel_grams: &[Array2<f64>],
    h: ArrayView2<'_, f64>,
) -> Result<GateGradient> {
    params.validate()?;
    let (n, d) = x.dim();
    let p = params.n_kernels();
    if d != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: d,
        });
    }
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: alpha.len(),
        });
    }
    if h.dim() != (n, p) {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            found: h.len(),
        });
    }
    if per_kernel_grams.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: per_kernel_grams.len(),
        });
    }
    if let Some(k) = per_kernel_grams.iter().find(|k| k.dim() != (n, n)) {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: k.len(),
        });
    }

    // r[[i, k]]: half of row-sum plus column-sum of c^k at sample i.
    let active: Vec<usize> = (0..n).filter(|&i| alpha[i] != 0.0).collect();
    let mut r = Array2::<f64>::zeros((n, p));
    for (k, gram) in per_kernel_grams.iter().enumerate() {
        let w: Vec<f64> = (0..n).map(|i| alpha[i] * h[[i, k]]).collect();
        for &i in &active {
            let mut row = 0.0;
            let mut col = 0.0;
            for &j in &active {
                row += gram[[i, j]] * w[j];
                col += gram[[j, i]] * w[j];
            }
            r[[i, k]] = 0.5 * w[i] * (row + col);
        }
    }
    let r_total = r.sum_axis(Axis(1));

    let mut grad = GateGradient {
        rows: Array2::zeros((p, d)),
        scalars: Array1::zeros(p),
    };
    for m in 0..p {
        // Per-sample coefficient of the chain-rule term for parameter block m.
        let coef: Array1<f64> = match params.kind {
            GatingKind::Softmax | GatingKind::Rbf => {
                Array1::from_shape_fn(n, |i| r[[i, m]] - h[[i, m]] * r_total[i])
            }
            GatingKind::Sigmoid => Array1::from_shape_fn(n, |i| r[[i, m]] * (1.0 - h[[i, m]])),
        };
        match params.kind {
            GatingKind::Softmax | GatingKind::Sigmoid => {
                grad.scalars[m] = -coef.sum();
                grad.rows.row_mut(m).assign(&(-x.t().dot(&coef)));
            }
            GatingKind::Rbf => {
                let center = params.rows.row(m);
                let s = params.scalars[m];
                let diff = &x - &center;
                grad.rows
                    .row_mut(m)
                    .assign(&(diff.t().dot(&coef) * (-2.0 / (s * s))));
                let spread: f64 = (0..n).map(|i| sq_dist(x.row(i), center) * coef[i]).sum();
                grad.scalars[m] = -2.0 * spread / (s * s * s);
            }
        }
    }
    Ok(grad)
}

/// Random initial parameters from a seeded stream.
///
/// Softmax and sigmoid draw every entry uniformly from `[-0.1, 0.1]`. RBF
/// takes `p` training rows as centers (without replacement when `N >= p`)
/// and sets every spread to the square root of the Gaussian bandwidth
/// heuristic on `x_train`.
pub fn init_gating(
    kind: GatingKind,
    p: usize,
    d: usize,
    x_train: ArrayView2<'_, f64>,
    seed: u64,
) -> Result<GatingParams> {
    if p == 0 {
        return Err(Error::InvalidGating("need at least one kernel".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = match kind {
        GatingKind::Softmax | GatingKind::Sigmoid => GatingParams {
            kind,
            rows: Array2::from_shape_fn((p, d), |_| rng.random_range(-INIT_RANGE..=INIT_RANGE)),
            scalars: Array1::from_shape_fn(p, |_| rng.random_range(-INIT_RANGE..=INIT_RANGE)),
        },
        GatingKind::Rbf => {
            let n = x_train.nrows();
            if n == 0 {
                return Err(Error::Empty("rbf gating needs training rows for its centers"));
            }
            if x_train.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x_train.ncols(),
                });
            }
            let picks: Vec<usize> = if n >= p {
                sample(&mut rng, n, p).into_vec()
            } else {
                (0..p).map(|_| rng.random_range(0..n)).collect()
            };
            let spread = if n >= 2 {
                gaussian_bandwidth(x_train)?.sqrt()
            } else {
                1.0
            };
            GatingParams {
                kind,
                rows: x_train.select(Axis(0), &picks),
                scalars: Array1::from_elem(p, spread),
            }
        }
    };
    Ok(params)
}
