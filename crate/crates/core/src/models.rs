//! The three trainable model families and their decision functions.
//!
//! Every model z-scores its inputs with statistics fit on the training rows,
//! resolves `gauss:auto` bandwidths on the normalized training rows, and keeps
//! only the support vectors.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{fit_normalizer, Normalizer, OUTLIER, TARGET};
use crate::error::{Error, Result};
use crate::gating::{gate_gradient, init_gating, GatingKind, GatingParams};
use crate::kernels::{gram, gram_sym, KernelSetting, KernelSpec};
use crate::solver::{solve_dual_from, DualProblem, DualSolution, SolverOptions};

/// Diagnostics gathered while training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_train: usize,
    pub n_sv: usize,
    /// Pair updates summed over every dual solve.
    pub solver_iterations: usize,
    /// Gap of the last dual solve.
    pub final_gap: f64,
    pub solver_converged: bool,
    /// Dual solves performed (1 for the fixed-kernel models).
    pub outer_iterations: usize,
    /// `1/2 a^T Q a` after each dual solve.
    pub objective_trace: Vec<f64>,
    pub outer_converged: bool,
}

impl TrainReport {
    /// Percentage of training rows kept as support vectors.
    pub fn sv_percent(&self) -> f64 {
        100.0 * self.n_sv as f64 / self.n_train as f64
    }
}

/// Behaviour shared by every trained model.
pub trait AnomalyModel {
    /// Signed distance to the boundary for a raw (unnormalized) input;
    /// non-negative means target.
    fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64>;

    fn n_features(&self) -> usize;

    fn report(&self) -> &TrainReport;

    fn decision_values(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.ncols(),
            });
        }
        x.rows().into_iter().map(|row| self.decision_value(row)).collect()
    }

    /// `+1` when the decision value is at least zero, `-1` otherwise.
    fn predict(&self, x: ArrayView1<'_, f64>) -> Result<i8> {
        Ok(label_of(self.decision_value(x)?))
    }

    fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<i8>> {
        Ok(self.decision_values(x)?.iter().map(|&f| label_of(f)).collect())
    }

    /// Percentage of training rows that are support vectors.
    fn sv_fraction(&self) -> f64 {
        self.report().sv_percent()
    }
}

pub fn label_of(decision: f64) -> i8 {
    if decision >= 0.0 {
        TARGET
    } else {
        OUTLIER
    }
}

/// Support vectors of a solved dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SupportSet {
    /// Normalized feature rows.
    features: Array2<f64>,
    alpha: Array1<f64>,
    rho: f64,
}

impl SupportSet {
    fn from_solution(x: ArrayView2<'_, f64>, sol: &DualSolution) -> Self {
        Self {
            features: x.select(Axis(0), &sol.support_indices),
            alpha: sol.support_indices.iter().map(|&i| sol.alpha[i]).collect(),
            rho: sol.rho,
        }
    }
}

fn check_train(train: ArrayView2<'_, f64>) -> Result<()> {
    if train.nrows() == 0 || train.ncols() == 0 {
        return Err(Error::Empty("no training targets"));
    }
    Ok(())
}

fn resolve_all(kernels: &[KernelSetting], x: ArrayView2<'_, f64>) -> Result<Vec<KernelSpec>> {
    if kernels.is_empty() {
        return Err(Error::InvalidKernel("need at least one kernel".into()));
    }
    kernels.iter().map(|k| k.resolve(x)).collect()
}

fn single_report(n: usize, sol: &DualSolution) -> TrainReport {
    TrainReport {
        n_train: n,
        n_sv: sol.support_indices.len(),
        solver_iterations: sol.iterations,
        final_gap: sol.gap,
        solver_converged: sol.converged,
        outer_iterations: 1,
        objective_trace: vec![sol.objective],
        outer_converged: true,
    }
}

/// Single-kernel one-class SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub kernel: KernelSpec,
    pub normalizer: Normalizer,
    pub nu: f64,
    support: SupportSet,
    pub report: TrainReport,
}

impl OcsvmModel {
    pub fn sv_features(&self) -> ArrayView2<'_, f64> {
        self.support.features.view()
    }

    pub fn sv_alpha(&self) -> ArrayView1<'_, f64> {
        self.support.alpha.view()
    }

    pub fn rho(&self) -> f64 {
        self.support.rho
    }
}

pub fn train_ocsvm(
    train_targets: ArrayView2<'_, f64>,
    kernel: &KernelSetting,
    nu: f64,
    solver: &SolverOptions,
) -> Result<OcsvmModel> {
    check_train(train_targets)?;
    let normalizer = fit_normalizer(train_targets)?;
    let x = normalizer.apply(train_targets)?;
    let spec = kernel.resolve(x.view())?;
    let problem = DualProblem::new(gram_sym(&spec, x.view()), nu)?;
    let sol = solve_dual_from(&problem, solver, None)?;
    Ok(OcsvmModel {
        kernel: spec,
        normalizer,
        nu,
        report: single_report(x.nrows(), &sol),
        support: SupportSet::from_solution(x.view(), &sol),
    })
}

impl AnomalyModel for OcsvmModel {
    fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let z = self.normalizer.apply_row(x)?;
        let s = &self.support;
        let total: f64 = s
            .features
            .rows()
            .into_iter()
            .zip(s.alpha.iter())
            .map(|(sv, &a)| a * self.kernel.apply(sv, z.view()))
            .sum();
        Ok(total - s.rho)
    }

    fn n_features(&self) -> usize {
        self.normalizer.dim()
    }

    fn report(&self) -> &TrainReport {
        &self.report
    }
}

fn check_simplex(weights: ArrayView1<'_, f64>, p: usize) -> Result<()> {
    if weights.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: weights.len(),
        });
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::NotOnSimplex(format!("{weights}")));
    }
    Ok(())
}

/// `sum_m weights[m] * K_m(X, Y)`.
pub fn composite_gram_fixed(
    kernels: &[KernelSpec],
    weights: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    check_simplex(weights, kernels.len())?;
    let mut total = Array2::zeros((x.nrows(), y.nrows()));
    for (spec, &w) in kernels.iter().zip(weights.iter()) {
        total.scaled_add(w, &gram(spec, x, y)?);
    }
    Ok(total)
}

/// Locally combined kernel `sum_m H_X[i, m] K_m(x_i, y_j) H_Y[j, m]`.
pub fn composite_gram_localized(
    kernels: &[KernelSpec],
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    h_x: ArrayView2<'_, f64>,
    h_y: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let p = kernels.len();
    if h_x.dim() != (x.nrows(), p) || h_y.dim() != (y.nrows(), p) {
        return Err(Error::DimensionMismatch {
            expected: x.nrows() * p,
            found: h_x.len(),
        });
    }
    let grams = kernels
        .iter()
        .map(|k| gram(k, x, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(localized_from_grams(&grams, h_x, h_y))
}

fn localized_from_grams(grams: &[Array2<f64>], h_x: ArrayView2<'_, f64>, h_y: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, m) = grams[0].dim();
    Array2::from_shape_fn((n, m), |(i, j)| {
        grams
            .iter()
            .enumerate()
            .map(|(k, g)| h_x[[i, k]] * g[[i, j]] * h_y[[j, k]])
            .sum()
    })
}

/// Exactly symmetric variant for the training Gram: the lower triangle
/// mirrors the upper one.
fn localized_sym(grams: &[Array2<f64>], h: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = grams[0].nrows();
    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v: f64 = grams
                .iter()
                .enumerate()
                .map(|(k, g)| h[[i, k]] * g[[i, j]] * h[[j, k]])
                .sum();
            q[[i, j]] = v;
            q[[j, i]] = v;
        }
    }
    q
}

/// One-class SVM over a fixed convex combination of kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkadModel {
    pub kernels: Vec<KernelSpec>,
    pub weights: Array1<f64>,
    pub normalizer: Normalizer,
    pub nu: f64,
    support: SupportSet,
    pub report: TrainReport,
}

impl MkadModel {
    pub fn sv_features(&self) -> ArrayView2<'_, f64> {
        self.support.features.view()
    }

    pub fn sv_alpha(&self) -> ArrayView1<'_, f64> {
        self.support.alpha.view()
    }

    pub fn rho(&self) -> f64 {
        self.support.rho
    }
}

/// MKAD with uniform weights `1/p`.
pub fn train_mkad(
    train_targets: ArrayView2<'_, f64>,
    kernels: &[KernelSetting],
    nu: f64,
    solver: &SolverOptions,
) -> Result<MkadModel> {
    let p = kernels.len().max(1);
    let weights = Array1::from_elem(p, 1.0 / p as f64);
    train_mkad_weighted(train_targets, kernels, weights.view(), nu, solver)
}

pub fn train_mkad_weighted(
    train_targets: ArrayView2<'_, f64>,
    kernels: &[KernelSetting],
    weights: ArrayView1<'_, f64>,
    nu: f64,
    solver: &SolverOptions,
) -> Result<MkadModel> {
    check_train(train_targets)?;
    let normalizer = fit_normalizer(train_targets)?;
    let x = normalizer.apply(train_targets)?;
    let specs = resolve_all(kernels, x.view())?;
    check_simplex(weights, specs.len())?;
    let n = x.nrows();
    let mut q = Array2::zeros((n, n));
    for (spec, &w) in specs.iter().zip(weights.iter()) {
        q.scaled_add(w, &gram_sym(spec, x.view()));
    }
    let sol = solve_dual_from(&DualProblem::new(q, nu)?, solver, None)?;
    Ok(MkadModel {
        kernels: specs,
        weights: weights.to_owned(),
        normalizer,
        nu,
        report: single_report(n, &sol),
        support: SupportSet::from_solution(x.view(), &sol),
    })
}

impl AnomalyModel for MkadModel {
    fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let z = self.normalizer.apply_row(x)?;
        let s = &self.support;
        let total: f64 = s
            .features
            .rows()
            .into_iter()
            .zip(s.alpha.iter())
            .map(|(sv, &a)| {
                let k: f64 = self
                    .kernels
                    .iter()
                    .zip(self.weights.iter())
                    .map(|(spec, &w)| w * spec.apply(sv, z.view()))
                    .sum();
                a * k
            })
            .sum();
        Ok(total - s.rho)
    }

    fn n_features(&self) -> usize {
        self.normalizer.dim()
    }

    fn report(&self) -> &TrainReport {
        &self.report
    }
}

/// Knobs of the alternating LMKAD optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmkadConfig {
    pub nu: f64,
    pub gating: GatingKind,
    /// Initial step size of the gating update.
    pub learning_rate: f64,
    /// Step size multiplier applied after every outer iteration.
    pub lr_decay: f64,
    /// Stop when the relative change of the dual objective is at most this.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub solver: SolverOptions,
    pub seed: u64,
    /// Start each dual solve from the previous multipliers.
    pub warm_start: bool,
}

impl Default for LmkadConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            gating: GatingKind::Sigmoid,
            learning_rate: 0.1,
            lr_decay: 0.95,
            outer_tol: 1e-4,
            max_outer: 100,
            solver: SolverOptions::default(),
            seed: 0,
            warm_start: true,
        }
    }
}

impl LmkadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lr_decay must be in (0, 1], got {}",
                self.lr_decay
            )));
        }
        if !(self.outer_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "outer_tol must be positive, got {}",
                self.outer_tol
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be >= 1".into()));
        }
        Ok(())
    }
}

/// One-class SVM whose kernel weights come from a learned gating function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmkadModel {
    pub kernels: Vec<KernelSpec>,
    pub gating: GatingParams,
    pub normalizer: Normalizer,
    pub nu: f64,
    support: SupportSet,
    /// Gate values at each support vector.
    sv_eta: Array2<f64>,
    pub report: TrainReport,
}

impl LmkadModel {
    pub fn sv_features(&self) -> ArrayView2<'_, f64> {
        self.support.features.view()
    }

    pub fn sv_alpha(&self) -> ArrayView1<'_, f64> {
        self.support.alpha.view()
    }

    pub fn sv_eta(&self) -> ArrayView2<'_, f64> {
        self.sv_eta.view()
    }

    pub fn rho(&self) -> f64 {
        self.support.rho
    }
}

/// Alternates a dual solve on the locally combined kernel with one gradient
/// step on the gating parameters, starting from seeded random gates.
pub fn train_lmkad(
    train_targets: ArrayView2<'_, f64>,
    kernels: &[KernelSetting],
    config: &LmkadConfig,
) -> Result<LmkadModel> {
    check_train(train_targets)?;
    let normalizer = fit_normalizer(train_targets)?;
    let x = normalizer.apply(train_targets)?;
    let gating = init_gating(config.gating, kernels.len(), x.ncols(), x.view(), config.seed)?;
    fit_lmkad(normalizer, x, kernels, gating, config)
}

/// As [`train_lmkad`], from explicit initial gating parameters (in the
/// normalized feature space).
pub fn train_lmkad_from(
    train_targets: ArrayView2<'_, f64>,
    kernels: &[KernelSetting],
    initial: GatingParams,
    config: &LmkadConfig,
) -> Result<LmkadModel> {
    check_train(train_targets)?;
    let normalizer = fit_normalizer(train_targets)?;
    let x = normalizer.apply(train_targets)?;
    fit_lmkad(normalizer, x, kernels, initial, config)
}

fn fit_lmkad(
    normalizer: Normalizer,
    x: Array2<f64>,
    kernels: &[KernelSetting],
    mut gating: GatingParams,
    config: &LmkadConfig,
) -> Result<LmkadModel> {
    config.validate()?;
    let specs = resolve_all(kernels, x.view())?;
    gating.validate()?;
    if gating.n_kernels() != specs.len() || gating.dim() != x.ncols() {
        return Err(Error::InvalidGating(format!(
            "gating is {}x{}, expected {}x{}",
            gating.n_kernels(),
            gating.dim(),
            specs.len(),
            x.ncols()
        )));
    }
    let grams: Vec<Array2<f64>> = specs.iter().map(|s| gram_sym(s, x.view())).collect();

    let mut report = TrainReport {
        n_train: x.nrows(),
        ..Default::default()
    };
    let mut previous: Option<DualSolution> = None;
    let mut step = config.learning_rate;
    let (sol, h) = loop {
        let h = gating.eval_batch(x.view())?;
        let problem = DualProblem::new(localized_sym(&grams, h.view()), config.nu)?;
        let start = previous
            .as_ref()
            .filter(|_| config.warm_start)
            .map(|s| s.alpha.view());
        let sol = solve_dual_from(&problem, &config.solver, start)?;
        report.outer_iterations += 1;
        report.solver_iterations += sol.iterations;
        report.objective_trace.push(sol.objective);

        if let Some(prev) = &previous {
            let change = (sol.objective - prev.objective).abs() / prev.objective.abs().max(1e-12);
            if change <= config.outer_tol {
                report.outer_converged = true;
                break (sol, h);
            }
        }
        if report.outer_iterations >= config.max_outer {
            break (sol, h);
        }

        let grad = gate_gradient(&gating, sol.alpha.view(), x.view(), &grams, h.view())?;
        if !grad.is_finite() {
            return Err(Error::NonFiniteGradient(report.outer_iterations));
        }
        gating = gating.descend(&grad, step);
        step *= config.lr_decay;
        previous = Some(sol);
    };

    report.n_sv = sol.support_indices.len();
    report.final_gap = sol.gap;
    report.solver_converged = sol.converged;
    Ok(LmkadModel {
        kernels: specs,
        sv_eta: h.select(Axis(0), &sol.support_indices),
        support: SupportSet::from_solution(x.view(), &sol),
        gating,
        normalizer,
        nu: config.nu,
        report,
    })
}

impl AnomalyModel for LmkadModel {
    fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let z = self.normalizer.apply_row(x)?;
        let eta = self.gating.eval(z.view())?;
        let s = &self.support;
        let mut total = 0.0;
        for (i, sv) in s.features.rows().into_iter().enumerate() {
            let k: f64 = self
                .kernels
                .iter()
                .enumerate()
                .map(|(m, spec)| eta[m] * spec.apply(z.view(), sv) * self.sv_eta[[i, m]])
                .sum();
            total += s.alpha[i] * k;
        }
        Ok(total - s.rho)
    }

    fn n_features(&self) -> usize {
        self.normalizer.dim()
    }

    fn report(&self) -> &TrainReport {
        &self.report
    }
}

/// Any trained model, as stored in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TrainedModel {
    Ocsvm(OcsvmModel),
    Mkad(MkadModel),
    Lmkad(LmkadModel),
}

impl TrainedModel {
    fn inner(&self) -> &dyn AnomalyModel {
        match self {
            TrainedModel::Ocsvm(m) => m,
            TrainedModel::Mkad(m) => m,
            TrainedModel::Lmkad(m) => m,
        }
    }
}

impl AnomalyModel for TrainedModel {
    fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        self.inner().decision_value(x)
    }

    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn report(&self) -> &TrainReport {
        self.inner().report()
    }
}

impl From<OcsvmModel> for TrainedModel {
    fn from(m: OcsvmModel) -> Self {
        TrainedModel::Ocsvm(m)
    }
}

impl From<MkadModel> for TrainedModel {
    fn from(m: MkadModel) -> Self {
        TrainedModel::Mkad(m)
    }
}

impl From<LmkadModel> for TrainedModel {
    fn from(m: LmkadModel) -> Self {
        TrainedModel::Lmkad(m)
    }
}
