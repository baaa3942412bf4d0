//! Crate-wide error type and result alias.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, VecoptError>;

#[derive(Debug, Error)]
pub enum VecoptError {
    #[error("cone is not pointed: coefficient matrix has rank {rank}, dimension {dim}")]
    NotPointed { rank: usize, dim: usize },
    #[error("cone has empty interior: max-min optimum {optimum:.3e} is not positive")]
    EmptyInterior { optimum: f64 },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("row {0} of the coefficient matrix has zero norm")]
    ZeroRow(usize),
    #[error("invalid angle {degrees} deg, expected {expected}")]
    InvalidAngle { degrees: f64, expected: &'static str },
    #[error("ice-cream approximation needs at least 3 facets, got {0}")]
    TooFewFacets(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("empty input")]
    EmptyInput,
    #[error(
        "solver did not converge: best distance bound {best_bound:.6e} does not decide the predicate"
    )]
    SolverDidNotConverge { best_bound: f64 },
    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("budget {budget} too small, need at least {required}")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("cost vector invalid: every per-objective cost must be finite and positive")]
    CostVectorInvalid,
    #[error("model error: {0}")]
    ModelError(String),
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("row {0} contains a non-finite value")]
    MalformedRow(usize),
    #[error("column {0:?} is missing or non-numeric")]
    NonNumericColumn(String),
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("schema mismatch in {0}")]
    SchemaMismatch(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
