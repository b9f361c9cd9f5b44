//! Linear, polynomial and Gaussian kernels.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A concrete, evaluable kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `x . y`
    Linear,
    /// `(x . y + 1)^degree`
    Polynomial { degree: u32 },
    /// `exp(-|x - y|^2 / sigma_sq)`
    Gaussian { sigma_sq: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { degree } if degree < 1 => Err(Error::InvalidKernel(
                format!("polynomial degree must be >= 1, got {degree}"),
            )),
            KernelSpec::Gaussian { sigma_sq } if !(sigma_sq > 0.0 && sigma_sq.is_finite()) => Err(
                Error::InvalidKernel(format!("gaussian sigma_sq must be positive, got {sigma_sq}")),
            ),
            _ => Ok(()),
        }
    }

    /// Kernel value for two equal-length vectors. The caller checks lengths.
    #[inline]
    pub fn apply(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        match *self {
            KernelSpec::Linear => x.dot(&y),
            KernelSpec::Polynomial { degree } => (x.dot(&y) + 1.0).powi(degree as i32),
            KernelSpec::Gaussian { sigma_sq } => {
                let d2: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / sigma_sq).exp()
            }
        }
    }

    /// Single letter used in classifier names: `g`, `p` or `l`.
    pub fn letter(&self) -> char {
        match self {
            KernelSpec::Linear => 'l',
            KernelSpec::Polynomial { .. } => 'p',
            KernelSpec::Gaussian { .. } => 'g',
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(spec.apply(x, y))
}

/// Dense kernel matrix between the rows of `x` and the rows of `y`.
pub fn gram(spec: &KernelSpec, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
        });
    }
    Ok(Array2::from_shape_fn((x.nrows(), y.nrows()), |(i, j)| {
        spec.apply(x.row(i), y.row(j))
    }))
}

/// Symmetric Gram matrix of `x` against itself. Only the upper triangle is
/// evaluated, so the result is exactly symmetric.
pub fn gram_sym(spec: &KernelSpec, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = spec.apply(x.row(i), x.row(j));
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Mean squared Euclidean distance over unordered pairs `i < j`, or 1 when
/// all points coincide.
pub fn gaussian_bandwidth(x: ArrayView2<'_, f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Empty("bandwidth heuristic needs at least two rows"));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    let mean = total / (n * (n - 1) / 2) as f64;
    Ok(if mean < 1e-12 { 1.0 } else { mean })
}

/// A kernel as written in configuration: either concrete, or a Gaussian whose
/// bandwidth is set from the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSetting {
    Fixed(KernelSpec),
    GaussianAuto,
}

impl KernelSetting {
    /// Fixes the bandwidth of `GaussianAuto` from `train`. A single training
    /// row falls back to `sigma_sq = 1`.
    pub fn resolve(&self, train: ArrayView2<'_, f64>) -> Result<KernelSpec> {
        let spec = match *self {
            KernelSetting::Fixed(spec) => spec,
            KernelSetting::GaussianAuto => KernelSpec::Gaussian {
                sigma_sq: if train.nrows() < 2 {
                    1.0
                } else {
                    gaussian_bandwidth(train)?
                },
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn letter(&self) -> char {
        match self {
            KernelSetting::Fixed(spec) => spec.letter(),
            KernelSetting::GaussianAuto => 'g',
        }
    }

    /// Parses one kernel token or a comma-separated list; `gpl` and `gpp` are
    /// presets for gaussian+poly(2)+linear and gaussian+poly(2)+poly(3).
    pub fn parse_list(s: &str) -> Result<Vec<KernelSetting>> {
        match s.trim() {
            "gpl" => Ok(preset_gpl()),
            "gpp" => Ok(preset_gpp()),
            "g" => Ok(vec![KernelSetting::GaussianAuto]),
            "l" => Ok(vec![KernelSetting::Fixed(KernelSpec::Linear)]),
            "p" => Ok(vec![KernelSetting::Fixed(KernelSpec::Polynomial { degree: 2 })]),
            list => list.split(',').map(|t| t.trim().parse()).collect(),
        }
    }
}

pub fn preset_gpl() -> Vec<KernelSetting> {
    vec![
        KernelSetting::GaussianAuto,
        KernelSetting::Fixed(KernelSpec::Polynomial { degree: 2 }),
        KernelSetting::Fixed(KernelSpec::Linear),
    ]
}

pub fn preset_gpp() -> Vec<KernelSetting> {
    vec![
        KernelSetting::GaussianAuto,
        KernelSetting::Fixed(KernelSpec::Polynomial { degree: 2 }),
        KernelSetting::Fixed(KernelSpec::Polynomial { degree: 3 }),
    ]
}

/// Short name of a kernel list, e.g. `gpl`.
pub fn combination_name(kernels: &[KernelSetting]) -> String {
    kernels.iter().map(KernelSetting::letter).collect()
}

impl FromStr for KernelSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidKernel(format!("cannot parse kernel {s:?}"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let setting = match (name, arg) {
            ("linear", None) => KernelSetting::Fixed(KernelSpec::Linear),
            ("poly", Some(arg)) => {
                let q = arg.strip_prefix("q=").ok_or_else(bad)?;
                KernelSetting::Fixed(KernelSpec::Polynomial {
                    degree: q.parse().map_err(|_| bad())?,
                })
            }
            ("gauss", Some("auto")) => KernelSetting::GaussianAuto,
            ("gauss", Some(arg)) => {
                let v = arg.strip_prefix("sigma_sq=").ok_or_else(bad)?;
                KernelSetting::Fixed(KernelSpec::Gaussian {
                    sigma_sq: v.parse().map_err(|_| bad())?,
                })
            }
            _ => return Err(bad()),
        };
        if let KernelSetting::Fixed(spec) = setting {
            spec.validate()?;
        }
        Ok(setting)
    }
}

impl fmt::Display for KernelSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSetting::Fixed(spec) => spec.fmt(f),
            KernelSetting::GaussianAuto => f.write_str("gauss:auto"),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => f.write_str("linear"),
            KernelSpec::Polynomial { degree } => write!(f, "poly:q={degree}"),
            KernelSpec::Gaussian { sigma_sq } => write!(f, "gauss:sigma_sq={sigma_sq}"),
        }
    }
}
