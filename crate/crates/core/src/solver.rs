//! SMO solver for the one-class SVM dual
//!
//! ```text
//! min_a  1/2 a^T Q a   s.t.  0 <= a_i <= C,  sum_i a_i = 1,   C = 1 / (nu N)
//! ```
//!
//! over a dense, precomputed Gram matrix.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when checking symmetry of `Q`.
const SYMMETRY_TOL: f64 = 1e-9;

/// Curvature floor for a degenerate pair (`Q_ii + Q_jj - 2 Q_ij <= 0`).
const MIN_CURVATURE: f64 = 1e-12;

/// A feasible one-class dual problem.
#[derive(Debug, Clone)]
pub struct DualProblem {
    q: Array2<f64>,
    nu: f64,
    upper_bound: f64,
}

impl DualProblem {
    pub fn new(q: Array2<f64>, nu: f64) -> Result<Self> {
        let n = q.nrows();
        if n == 0 {
            return Err(Error::Empty("dual problem needs at least one sample"));
        }
        if q.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: q.ncols(),
            });
        }
        // nu * N >= 1, with slack for nu = 1/N typed as a decimal.
        if !(nu > 0.0 && nu <= 1.0) || nu * (n as f64) < 1.0 - 1e-12 {
            return Err(Error::InfeasibleNu { nu, n });
        }
        let scale = q.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            if !(q[[i, i]] >= 0.0) {
                return Err(Error::NegativeDiagonal(i, q[[i, i]]));
            }
            for j in (i + 1)..n {
                let gap = (q[[i, j]] - q[[j, i]]).abs();
                if !(gap <= SYMMETRY_TOL * scale) {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(Self {
            upper_bound: (1.0 / (nu * n as f64)).min(1.0),
            q,
            nu,
        })
    }

    pub fn q(&self) -> ArrayView2<'_, f64> {
        self.q.view()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Box bound `C = 1 / (nu N)`.
    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.q.nrows() == 0
    }

    /// Threshold on `alpha` separating support vectors from zeros.
    pub fn sv_epsilon(&self) -> f64 {
        sv_epsilon(self.upper_bound)
    }
}

pub fn sv_epsilon(upper_bound: f64) -> f64 {
    1e-8 * upper_bound
}

/// How the offset `rho` is estimated from a solved dual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoRule {
    /// Mean of `(Q a)_i` over margin support vectors (`0 < a_i < C`), falling
    /// back to all support vectors when no multiplier is strictly inside the box.
    #[default]
    MarginMean,
    /// Mean of `(Q a)_i` over every training row, so the training decision
    /// values average to zero.
    MeanAllTrain,
}

impl FromStr for RhoRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "margin" | "margin-mean" => Ok(RhoRule::MarginMean),
            "mean-all-train" => Ok(RhoRule::MeanAllTrain),
            other => Err(Error::InvalidConfig(format!("unknown rho rule {other:?}"))),
        }
    }
}

impl fmt::Display for RhoRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RhoRule::MarginMean => "margin-mean",
            RhoRule::MeanAllTrain => "mean-all-train",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the maximal violating pair gap is at most `tol`.
    pub tol: f64,
    /// Cap on pair updates; `None` means `100 N^2`.
    pub max_iter: Option<usize>,
    pub rho: RhoRule,
    /// Record objective and violation after every pair update.
    #[serde(skip)]
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: None,
            rho: RhoRule::MarginMean,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub objective: f64,
    pub violation: f64,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Array1<f64>,
    /// `1/2 a^T Q a` at `alpha`.
    pub objective: f64,
    /// `Q a`.
    pub gradient: Array1<f64>,
    pub support_indices: Vec<usize>,
    pub margin_indices: Vec<usize>,
    pub rho: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    /// Final pair gap over the strict index sets used for selection.
    pub gap: f64,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

impl DualSolution {
    /// Unbiased training decision values `(Q a)_i - rho`.
    pub fn training_decisions(&self) -> Array1<f64> {
        &self.gradient - self.rho
    }
}

/// Solves the dual from the uniform starting point.
pub fn solve_dual(problem: &DualProblem, options: &SolverOptions) -> Result<DualSolution> {
    solve_dual_from(problem, options, None)
}

/// Solves the dual, optionally warm-started from `start`, which is projected
/// onto the feasible set first.
pub fn solve_dual_from(
    problem: &DualProblem,
    options: &SolverOptions,
    start: Option<ArrayView1<'_, f64>>,
) -> Result<DualSolution> {
    let n = problem.len();
    let c = problem.upper_bound;
    let q = problem.q();
    let mut alpha = match start {
        Some(s) if s.len() == n => project_to_feasible(s, c),
        Some(s) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.len(),
            })
        }
        None => Array1::from_elem(n, 1.0 / n as f64),
    };
    let max_iter = options.max_iter.unwrap_or(100 * n * n);
    let mut grad = q.dot(&alpha);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap;

    loop {
        let (i, j);
        (i, j, gap) = select_pair(&alpha, &grad, c);
        if options.record_trace {
            trace.push(TracePoint {
                objective: 0.5 * alpha.dot(&grad),
                violation: gap.max(0.0),
            });
        }
        if gap <= options.tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        // Move t units of mass from i (high gradient) to j (low gradient).
        let curvature = (q[[i, i]] + q[[j, j]] - 2.0 * q[[i, j]]).max(MIN_CURVATURE);
        let room_i = alpha[i];
        let room_j = c - alpha[j];
        let mut t = gap / curvature;
        if t >= room_i {
            t = room_i;
        }
        if t >= room_j {
            t = room_j;
        }
        if t == room_i {
            alpha[i] = 0.0;
        } else {
            alpha[i] -= t;
        }
        if t == room_j {
            alpha[j] = c;
        } else {
            alpha[j] += t;
        }
        let (col_i, col_j) = (q.column(i), q.column(j));
        for k in 0..n {
            grad[k] += t * (col_j[k] - col_i[k]);
        }
    }

    // Fresh gradient for the reported quantities.
    let grad = q.dot(&alpha);
    let eps = sv_epsilon(c);
    let support_indices: Vec<usize> = (0..n).filter(|&i| alpha[i] > eps).collect();
    let margin_indices: Vec<usize> = support_indices
        .iter()
        .copied()
        .filter(|&i| alpha[i] < c - eps)
        .collect();
    let rho = rho_from(&grad, &support_indices, &margin_indices, options.rho)?;
    Ok(DualSolution {
        objective: 0.5 * alpha.dot(&grad),
        alpha,
        gradient: grad,
        support_indices,
        margin_indices,
        rho,
        upper_bound: c,
        iterations,
        gap: gap.max(0.0),
        converged,
        trace,
    })
}

/// Maximal violating pair: `i` maximizes the gradient among multipliers that
/// can decrease, `j` minimizes it among those that can increase. Ties go to the
/// lowest index.
fn select_pair(alpha: &Array1<f64>, grad: &Array1<f64>, c: f64) -> (usize, usize, f64) {
    let mut i = usize::MAX;
    let mut j = usize::MAX;
    let mut g_max = f64::NEG_INFINITY;
    let mut g_min = f64::INFINITY;
    for k in 0..alpha.len() {
        if alpha[k] > 0.0 && grad[k] > g_max {
            g_max = grad[k];
            i = k;
        }
        if alpha[k] < c && grad[k] < g_min {
            g_min = grad[k];
            j = k;
        }
    }
    if i == usize::MAX || j == usize::MAX {
        // Every multiplier at zero or every one at C: only possible when
        // N C = 1, where the feasible set is a single point.
        return (0, 0, 0.0);
    }
    (i, j, g_max - g_min)
}

/// Euclidean projection onto `{0 <= a_i <= c, sum a = 1}` by bisection on the
/// common shift, followed by a residual fix-up on a free coordinate.
fn project_to_feasible(start: ArrayView1<'_, f64>, c: f64) -> Array1<f64> {
    let in_box = start.iter().all(|&a| (0.0..=c).contains(&a));
    if in_box && (start.sum() - 1.0).abs() <= 1e-12 {
        return start.to_owned();
    }
    let clipped = |shift: f64| start.mapv(|a| (a - shift).clamp(0.0, c));
    let lo0 = start.iter().copied().fold(f64::INFINITY, f64::min) - c - 1.0;
    let hi0 = start.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clipped(mid).sum() > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut alpha = clipped(0.5 * (lo + hi));
    let mut residual = 1.0 - alpha.sum();
    for a in alpha.iter_mut() {
        if residual == 0.0 {
            break;
        }
        let next = (*a + residual).clamp(0.0, c);
        residual -= next - *a;
        *a = next;
    }
    alpha
}

fn rho_from(grad: &Array1<f64>, support: &[usize], margin: &[usize], rule: RhoRule) -> Result<f64> {
    let mean_over = |idx: &[usize]| idx.iter().map(|&i| grad[i]).sum::<f64>() / idx.len() as f64;
    match rule {
        RhoRule::MeanAllTrain => Ok(grad.mean().ok_or(Error::NoSupportVectors)?),
        RhoRule::MarginMean if !margin.is_empty() => Ok(mean_over(margin)),
        RhoRule::MarginMean if !support.is_empty() => Ok(mean_over(support)),
        RhoRule::MarginMean => Err(Error::NoSupportVectors),
    }
}

/// Offset `rho` for multipliers `alpha` on `q` under the box bound `c`.
pub fn compute_rho(alpha: ArrayView1<'_, f64>, q: ArrayView2<'_, f64>, c: f64, rule: RhoRule) -> Result<f64> {
    let grad = q.dot(&alpha);
    let eps = sv_epsilon(c);
    let support: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > eps).collect();
    let margin: Vec<usize> = support.iter().copied().filter(|&i| alpha[i] < c - eps).collect();
    rho_from(&grad, &support, &margin, rule)
}

/// Largest gradient among multipliers above `eps_sv` minus the smallest among
/// those below `C - eps_sv`, floored at zero.
pub fn kkt_violation(alpha: ArrayView1<'_, f64>, q: ArrayView2<'_, f64>, c: f64) -> f64 {
    let grad = q.dot(&alpha);
    let eps = sv_epsilon(c);
    let mut g_max = f64::NEG_INFINITY;
    let mut g_min = f64::INFINITY;
    for k in 0..alpha.len() {
        if alpha[k] > eps {
            g_max = g_max.max(grad[k]);
        }
        if alpha[k] < c - eps {
            g_min = g_min.min(grad[k]);
        }
    }
    if g_max.is_finite() && g_min.is_finite() {
        (g_max - g_min).max(0.0)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn solve(q: Array2<f64>, nu: f64) -> DualSolution {
        solve_dual(&DualProblem::new(q, nu).unwrap(), &SolverOptions::default()).unwrap()
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        for k in [-0.5, 0.0, 0.3, 0.99] {
            let sol = solve(array![[1.0, k], [k, 1.0]], 1.0);
            assert_abs_diff_eq!(sol.alpha[0], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(sol.alpha[1], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(sol.objective, (1.0 + k) / 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(sol.rho, 0.5 * (1.0 + k), epsilon = 1e-12);
            assert!(kkt_violation(sol.alpha.view(), array![[1.0, k], [k, 1.0]].view(), 1.0) < 1e-12);
        }
    }

    #[test]
    fn identity_gives_uniform() {
        let sol = solve(Array2::eye(3), 1.0);
        for a in sol.alpha.iter() {
            assert_abs_diff_eq!(*a, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(sol.objective, 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.rho, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rho_on_identity() {
        let n = 5;
        let alpha = Array1::from_elem(n, 1.0 / n as f64);
        let q = Array2::eye(n);
        for rule in [RhoRule::MarginMean, RhoRule::MeanAllTrain] {
            assert_abs_diff_eq!(compute_rho(alpha.view(), q.view(), 0.5, rule).unwrap(), 0.2, epsilon = 1e-15);
        }
        assert!(matches!(
            compute_rho(Array1::zeros(n).view(), q.view(), 0.5, RhoRule::MarginMean),
            Err(Error::NoSupportVectors)
        ));
    }

    #[test]
    fn vertex_violation() {
        let alpha = array![1.0, 0.0, 0.0];
        assert_eq!(kkt_violation(alpha.view(), Array2::eye(3).view(), 1.0), 1.0);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(matches!(DualProblem::new(Array2::eye(4), 0.0), Err(Error::InfeasibleNu { .. })));
        assert!(matches!(DualProblem::new(Array2::eye(4), 0.2), Err(Error::InfeasibleNu { .. })));
        assert!(matches!(DualProblem::new(Array2::eye(4), 1.5), Err(Error::InfeasibleNu { .. })));
        assert!(DualProblem::new(Array2::eye(4), 0.25).is_ok());
        assert!(matches!(
            DualProblem::new(array![[1.0, 0.5], [0.4, 1.0]], 1.0),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            DualProblem::new(array![[-1.0, 0.0], [0.0, 1.0]], 1.0),
            Err(Error::NegativeDiagonal(0, _))
        ));
        assert!(DualProblem::new(Array2::zeros((2, 3)), 1.0).is_err());
    }

    #[test]
    fn nu_one_forces_uniform_alpha() {
        let q = array![[2.0, 0.1, 0.3], [0.1, 1.0, -0.2], [0.3, -0.2, 0.5]];
        let sol = solve(q, 1.0);
        assert!(sol.alpha.iter().all(|&a| a == 1.0 / 3.0));
        assert!(sol.converged);
        assert_eq!(sol.support_indices.len(), 3);
    }

    #[test]
    fn single_sample() {
        let sol = solve(array![[2.5]], 1.0);
        assert_eq!(sol.alpha, array![1.0]);
        assert_eq!(sol.rho, 2.5);
        assert_eq!(sol.support_indices, vec![0]);
    }

    #[test]
    fn iteration_cap_is_soft() {
        let q = Array2::from_shape_fn((6, 6), |(i, j)| if i == j { 1.0 + i as f64 } else { 0.1 });
        let p = DualProblem::new(q, 0.5).unwrap();
        let opts = SolverOptions { max_iter: Some(1), ..Default::default() };
        let sol = solve_dual(&p, &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
        assert_abs_diff_eq!(sol.alpha.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_is_feasible() {
        for start in [array![5.0, -1.0, 0.2, 0.2], array![0.0, 0.0, 0.0, 0.0], array![0.25, 0.25, 0.25, 0.25]] {
            let a = project_to_feasible(start.view(), 0.5);
            assert_abs_diff_eq!(a.sum(), 1.0, epsilon = 1e-14);
            assert!(a.iter().all(|&v| (0.0..=0.5).contains(&v)));
        }
        let a = project_to_feasible(array![0.1, 0.2, 0.3, 0.4].view(), 0.5);
        assert_eq!(a, array![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn rule_parsing() {
        assert_eq!("mean-all-train".parse::<RhoRule>().unwrap(), RhoRule::MeanAllTrain);
        assert_eq!("margin".parse::<RhoRule>().unwrap(), RhoRule::MarginMean);
        assert!("median".parse::<RhoRule>().is_err());
    }
}
