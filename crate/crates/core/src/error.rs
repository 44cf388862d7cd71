use thiserror::Error;

/// Errors raised by the geometry, solvers and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("point outside the energy domain")]
    OutsideDomain,
    #[error("negative flow time {0}")]
    NegativeTime(f64),
    #[error("empty point list")]
    EmptyInput,
    #[error("weights do not match points: {0}")]
    WeightMismatch(String),
    #[error("proximal solver did not converge after {iterations} iterations (gradient {gradient:e})")]
    ProximalNonConvergence { iterations: usize, gradient: f64 },
    #[error("grid needs at least 3 nodes per axis, got {0}")]
    GridTooSmall(usize),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("infinite energy at the reference point")]
    InfiniteEnergy,
    #[error("conjugate gradient stalled at residual {residual:e} after {iterations} iterations")]
    CgNonConvergence { iterations: usize, residual: f64 },
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
