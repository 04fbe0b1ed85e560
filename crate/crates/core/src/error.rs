use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("invalid point: coordinate {index} is not finite")]
    InvalidPoint { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("minimum-norm-point iteration did not converge in {iterations} iterations")]
    ProjectionNoConvergence { iterations: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("element index {index} out of range ({count} elements)")]
    ElementOutOfRange { index: usize, count: usize },
    #[error("coefficient contract violated on element {element}: {reason}")]
    Coefficient { element: usize, reason: String },
    #[error("linear solver failed: {reason} (relative residual {residual:e})")]
    Solver { reason: String, residual: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations (last relative increment {increment:e})")]
    PicardNoConvergence { iterations: usize, increment: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
