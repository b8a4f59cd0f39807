//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("eigenvalue iteration failed to converge after {iterations} sweeps")]
    EigenNoConverge { iterations: usize },

    #[error("smoother error: {0}")]
    Smoother(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("training error: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("artifact format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
