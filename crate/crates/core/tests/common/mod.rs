#![allow(dead_code)]

use std::path::PathBuf;

use lmkad::dataset::{load_csv, LabelColumn};
use lmkad::{Dataset, GatingKind, GatingParams, ScoreMatrix};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn iris() -> Dataset {
    load_csv(&fixture("iris.csv"), &LabelColumn::Name("species".into()), "setosa", true).unwrap()
}

pub fn published_scores() -> ScoreMatrix {
    ScoreMatrix::from_csv(&std::fs::read_to_string(fixture("published_gmean_tables.csv")).unwrap()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, half_width: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-half_width..half_width))
}

/// `B B^T` for a random `n x (n + 2)` matrix `B`: symmetric positive definite
/// with probability one.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let b = uniform_matrix(rng, n, n + 2, 1.0);
    let q = b.dot(&b.t());
    // Exact symmetry.
    Array2::from_shape_fn((n, n), |(i, j)| if i <= j { q[[i, j]] } else { q[[j, i]] })
}

pub fn random_gating(rng: &mut ChaCha8Rng, kind: GatingKind, p: usize, d: usize) -> GatingParams {
    let rows = uniform_matrix(rng, p, d, 1.0);
    let scalars = match kind {
        GatingKind::Rbf => Array1::from_shape_fn(p, |_| rng.random_range(0.7..2.0)),
        _ => Array1::from_shape_fn(p, |_| rng.random_range(-1.0..1.0)),
    };
    GatingParams::new(kind, rows, scalars).unwrap()
}

/// A random point of the simplex.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    let raw = Array1::from_shape_fn(n, |_| rng.random_range(0.05..1.0));
    let total = raw.sum();
    raw / total
}

/// Minimum of `1/2 a^T Q a` over `0 <= a <= c`, `sum a = 1`, by enumerating
/// every assignment of each coordinate to {lower bound, upper bound, free}
/// and solving the equality-constrained stationarity system of the free
/// block. Exponential in `n`; meant for `n <= 9`.
pub fn brute_force_qp(q: ArrayView2<'_, f64>, c: f64) -> (f64, Array1<f64>) {
    let n = q.nrows();
    let q_na = DMatrix::from_fn(n, n, |i, j| q[[i, j]]);
    let objective = |a: &DVector<f64>| 0.5 * a.dot(&(&q_na * a));
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut state = vec![0u8; n];
    loop {
        if let Some(a) = face_candidate(&q_na, c, &state) {
            let value = objective(&a);
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, a));
            }
        }
        // Next assignment in base 3.
        let mut k = 0;
        while k < n && state[k] == 2 {
            state[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        state[k] += 1;
    }
    let (value, a) = best.expect("feasible problem has a candidate");
    (value, Array1::from_iter(a.iter().copied()))
}

/// `state[i]`: 0 pins `a_i = 0`, 1 pins `a_i = c`, 2 leaves it free.
fn face_candidate(q: &DMatrix<f64>, c: f64, state: &[u8]) -> Option<DVector<f64>> {
    const FEAS: f64 = 1e-10;
    let n = state.len();
    let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
    let mut a = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
    let fixed_sum: f64 = a.sum();
    if free.is_empty() {
        return ((fixed_sum - 1.0).abs() <= FEAS).then_some(a);
    }
    // [Q_FF  -1] [a_F   ]   [-Q_FB a_B        ]
    // [1^T    0] [lambda] = [1 - sum a_B      ]
    let f = free.len();
    let mut m = DMatrix::zeros(f + 1, f + 1);
    let mut rhs = DVector::zeros(f + 1);
    for (r, &i) in free.iter().enumerate() {
        for (s, &j) in free.iter().enumerate() {
            m[(r, s)] = q[(i, j)];
        }
        m[(r, f)] = -1.0;
        m[(f, r)] = 1.0;
        rhs[r] = -(0..n).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * a[j]).sum::<f64>();
    }
    rhs[f] = 1.0 - fixed_sum;
    let sol = m.lu().solve(&rhs)?;
    for (r, &i) in free.iter().enumerate() {
        if !sol[r].is_finite() || sol[r] < -FEAS || sol[r] > c + FEAS {
            return None;
        }
        a[i] = sol[r].clamp(0.0, c);
    }
    Some(a)
}

/// `J = -1/2 a^T Q(eta) a` with `Q(eta)[i, j] = sum_m eta_m(x_i) K_m[i, j] eta_m(x_j)`.
pub fn objective_j(params: &GatingParams, alpha: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>, grams: &[Array2<f64>]) -> f64 {
    let h = params.eval_batch(x).unwrap();
    let n = x.nrows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for (m, k) in grams.iter().enumerate() {
                total += alpha[i] * alpha[j] * h[[i, m]] * k[[i, j]] * h[[j, m]];
            }
        }
    }
    -0.5 * total
}

/// Central finite differences of [`objective_j`] in every gating parameter,
/// returned as `(rows, scalars)`.
pub fn finite_difference(
    params: &GatingParams,
    alpha: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    grams: &[Array2<f64>],
    step: f64,
) -> (Array2<f64>, Array1<f64>) {
    let eval = |p: &GatingParams| objective_j(p, alpha, x, grams);
    let mut rows = Array2::zeros(params.rows.dim());
    for ((m, k), out) in rows.indexed_iter_mut() {
        let (mut plus, mut minus) = (params.clone(), params.clone());
        plus.rows[[m, k]] += step;
        minus.rows[[m, k]] -= step;
        *out = (eval(&plus) - eval(&minus)) / (2.0 * step);
    }
    let mut scalars = Array1::zeros(params.scalars.len());
    for (m, out) in scalars.iter_mut().enumerate() {
        let (mut plus, mut minus) = (params.clone(), params.clone());
        plus.scalars[m] += step;
        minus.scalars[m] -= step;
        *out = (eval(&plus) - eval(&minus)) / (2.0 * step);
    }
    (rows, scalars)
}

/// The gradient formulas exactly as printed for each gating family: a plain
/// quadruple loop over `i, j, k` and the parameter index, with no
/// factoring.
pub fn printed_gradient(
    params: &GatingParams,
    alpha: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    grams: &[Array2<f64>],
) -> (Array2<f64>, Array1<f64>) {
    let h = params.eval_batch(x).unwrap();
    let (n, d) = x.dim();
    let p = grams.len();
    let delta = |m: usize, k: usize| if m == k { 1.0 } else { 0.0 };
    let mut rows = Array2::zeros((p, d));
    let mut scalars = Array1::zeros(p);
    for m in 0..p {
        for i in 0..n {
            for j in 0..n {
                let kernels: Vec<usize> = match params.kind {
                    GatingKind::Sigmoid => vec![m],
                    _ => (0..p).collect(),
                };
                for k in kernels {
                    let c = alpha[i] * alpha[j] * h[[i, k]] * grams[k][[i, j]] * h[[j, k]];
                    match params.kind {
                        GatingKind::Softmax => {
                            let (ti, tj) = (delta(m, k) - h[[i, m]], delta(m, k) - h[[j, m]]);
                            scalars[m] += -0.5 * c * (ti + tj);
                            for e in 0..d {
                                rows[[m, e]] += -0.5 * c * (x[[i, e]] * ti + x[[j, e]] * tj);
                            }
                        }
                        GatingKind::Sigmoid => {
                            let (ti, tj) = (1.0 - h[[i, m]], 1.0 - h[[j, m]]);
                            scalars[m] += -0.5 * c * (ti + tj);
                            for e in 0..d {
                                rows[[m, e]] += -0.5 * c * (x[[i, e]] * ti + x[[j, e]] * tj);
                            }
                        }
                        GatingKind::Rbf => {
                            let mu = params.rows.row(m);
                            let s = params.scalars[m];
                            let (ti, tj) = (delta(m, k) - h[[i, m]], delta(m, k) - h[[j, m]]);
                            let di: f64 = (0..d).map(|e| (x[[i, e]] - mu[e]).powi(2)).sum();
                            let dj: f64 = (0..d).map(|e| (x[[j, e]] - mu[e]).powi(2)).sum();
                            scalars[m] += -c * (di * ti + dj * tj) / s.powi(3);
                            for e in 0..d {
                                rows[[m, e]] += -c * ((x[[i, e]] - mu[e]) * ti + (x[[j, e]] - mu[e]) * tj) / (s * s);
                            }
                        }
                    }
                }
            }
        }
    }
    (rows, scalars)
}

/// `|a - b| <= max(rel * max(|a|, |b|), abs_floor)`.
pub fn close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    (a - b).abs() <= (rel * a.abs().max(b.abs())).max(abs_floor)
}

pub fn min_eigenvalue(q: ArrayView2<'_, f64>) -> f64 {
    let n = q.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| q[[i, j]]);
    m.symmetric_eigen().eigenvalues.min()
}

/// Published average Friedman ranks and MGmean (%) per classifier.
pub const PUBLISHED_RANKS: [(&str, f64, f64); 14] = [
    ("LMKAD(S_gpp)", 2.98, 75.59),
    ("LMKAD(So_gpl)", 5.30, 74.24),
    ("LMKAD(S_gpl)", 5.38, 75.19),
    ("LMKAD(So_gpp)", 5.40, 74.25),
    ("LMKAD(R_gpl)", 5.60, 74.08),
    ("LMKAD(R_gpp)", 5.70, 74.12),
    ("MKAD(gpp)", 6.48, 72.36),
    ("MKAD(gpl)", 7.32, 72.01),
    ("OCSVM(g)", 7.70, 72.86),
    ("SVDD(g)", 7.98, 72.59),
    ("KOC(g)", 8.20, 72.13),
    ("KPCA(g)", 11.52, 68.25),
    ("OCSVM(p)", 11.84, 62.25),
    ("OCSVM(l)", 13.60, 56.87),
];

/// Published PMG (%) per classifier.
pub const PUBLISHED_PMG: [(&str, f64); 14] = [
    ("LMKAD(S_gpp)", 98.91),
    ("LMKAD(S_gpl)", 98.38),
    ("LMKAD(So_gpp)", 97.36),
    ("LMKAD(So_gpl)", 97.35),
    ("LMKAD(R_gpp)", 97.18),
    ("LMKAD(R_gpl)", 97.15),
    ("MKAD(gpp)", 95.42),
    ("OCSVM(g)", 95.28),
    ("MKAD(gpl)", 95.02),
    ("SVDD(g)", 94.91),
    ("KOC(g)", 94.24),
    ("KPCA(g)", 89.72),
    ("OCSVM(p)", 80.13),
    ("OCSVM(l)", 75.41),
];

pub fn column(scores: &ScoreMatrix, name: &str) -> usize {
    scores.classifiers.iter().position(|c| c == name).unwrap()
}
