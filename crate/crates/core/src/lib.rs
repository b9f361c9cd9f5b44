//! One-class SVM anomaly detection with three model families:
//!
//! * [`OcsvmModel`]: single-kernel one-class SVM.
//! * [`MkadModel`]: one-class SVM over a fixed, uniformly weighted sum of kernels.
//! * [`LmkadModel`]: localized multiple kernels, where a gating function assigns
//!   per-sample kernel weights and is learned by alternating a dual solve with a
//!   gradient step on the gating parameters.
//!
//! The [`evaluation`] module carries the benchmark protocol: stratified
//! repeated cross-validation with validation-set hyperparameter selection,
//! Gmean, MGmean, PMG and the Friedman / Iman-Davenport test.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gating;
pub mod kernels;
pub mod models;
pub mod persist;
pub mod solver;

pub use dataset::{Dataset, FoldPlan, Normalizer, OccSplit};
pub use error::{Error, Result};
pub use evaluation::{ClassifierConfig, CvResult, Family, FriedmanReport, GridEntry, Protocol, ScoreMatrix};
pub use gating::{GateGradient, GatingKind, GatingParams};
pub use kernels::{KernelSetting, KernelSpec};
pub use models::{
    AnomalyModel, LmkadConfig, LmkadModel, MkadModel, OcsvmModel, TrainReport, TrainedModel,
};
pub use solver::{DualProblem, DualSolution, RhoRule, SolverOptions};
