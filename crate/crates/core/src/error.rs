use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-conformable shapes: {0}")]
    Shape(String),

    #[error("quadrature did not reach tolerance {tol:e} (last change {last_change:e} after {evaluations} evaluations)")]
    Quadrature {
        tol: f64,
        last_change: f64,
        evaluations: usize,
    },

    #[error("covariance matrix is near-singular (condition number {0:e})")]
    NearSingular(f64),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
