use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("non-numeric value {value:?} at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("label column {0:?} not found")]
    UnknownLabelColumn(String),

    #[error("target label {0:?} does not occur in the label column")]
    TargetLabelAbsent(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("class {label:+} has {count} rows, fewer than {n_folds} folds")]
    ClassTooSmall {
        label: i8,
        count: usize,
        n_folds: usize,
    },

    #[error("index out of range: {what} = {index}, bound {bound}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid gating parameters: {0}")]
    InvalidGating(String),

    #[error("infeasible nu {nu}: need 0 < nu <= 1 and nu * n >= 1 (n = {n})")]
    InfeasibleNu { nu: f64, n: usize },

    #[error("matrix is not symmetric: |Q[{i},{j}] - Q[{j},{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("matrix has a negative diagonal entry Q[{0},{0}] = {1}")]
    NegativeDiagonal(usize, f64),

    #[error("no support vectors in the dual solution")]
    NoSupportVectors,

    #[error("weights are not on the simplex: {0}")]
    NotOnSimplex(String),

    #[error("non-finite gating gradient at outer iteration {0}")]
    NonFiniteGradient(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty hyperparameter grid")]
    EmptyGrid,

    #[error("score matrix: {0}")]
    ScoreMatrix(String),

    #[error("model file: {0}")]
    ModelFormat(String),
}
