use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum QgpeError {
    /// A caller-supplied argument is malformed (wrong length, bad axis, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Densifying would exceed the configured element cap.
    #[error("dense size cap exceeded: {requested} elements requested, cap is {cap}")]
    SizeCap { requested: u128, cap: u128 },

    /// The Krylov exponential did not reach the requested tolerance.
    #[error("krylov exponential did not converge: error estimate {estimate:.3e} after {dim} vectors")]
    Krylov { estimate: f64, dim: usize },

    /// A state collapsed to zero norm.
    #[error("state collapsed to zero norm: {0}")]
    Collapse(String),

    /// Dense linear algebra failure reported by LAPACK.
    #[error("linear algebra failure: {0}")]
    Linalg(String),

    /// Unknown magic, truncated payload or inconsistent header.
    #[error("file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<ndarray_linalg::error::LinalgError> for QgpeError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        QgpeError::Linalg(e.to_string())
    }
}

impl From<ndarray::ShapeError> for QgpeError {
    fn from(e: ndarray::ShapeError) -> Self {
        QgpeError::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QgpeError>;
