use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("site {0} is not a free site of the region")]
    NotFree(String),

    #[error("free region is empty")]
    EmptyFreeRegion,

    #[error("{what} exceeds limit: {size} > {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("matrix is not positive definite (pivot {pivot}: {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("iterative solve stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("shell truncated by the window boundary: {0}")]
    Truncated(String),

    #[error("cutoff denominator vanishes at {0}")]
    ZeroDenominator(String),

    #[error("insufficient range for fit: {0}")]
    InsufficientRange(String),

    #[error("missing reference constant: {0}")]
    MissingReference(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
