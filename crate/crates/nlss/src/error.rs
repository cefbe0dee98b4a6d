//! Error types shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NlssError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("convergence failure in {context}: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        context: String,
        residual: f64,
        iterations: usize,
    },

    #[error("blowup detected at t = {t:.6e}: {detail}")]
    Blowup { t: f64, detail: String },

    #[error("format error at byte offset {offset}: {detail}")]
    Format { offset: u64, detail: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NlssError>;
