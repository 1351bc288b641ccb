use thiserror::Error;

/// Errors produced by the numerical kernels, solvers and scenario I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("schema error at `{0}`")]
    Schema(String),

    #[error("all auxiliary variables are zero")]
    AllZeroAuxiliaries,

    #[error("degenerate stream: |u^H H^H v| = {0:.3e}")]
    DegenerateStream(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
