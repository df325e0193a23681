//! Error type shared across the library.

use thiserror::Error;

/// Library-wide error enum. The CLI maps `Io`/`Format` to exit code 2 and
/// everything else to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration values.
    #[error("config: {0}")]
    Config(String),
    /// Tensor or matrix dimensions do not line up.
    #[error("shape: {0}")]
    Shape(String),
    /// A numerical precondition failed (singular system, non-finite values, ...).
    #[error("numerical: {0}")]
    Numerical(String),
    /// Rejection sampling exhausted its attempt budget.
    #[error("sampling: {0}")]
    Sampling(String),
    /// Underlying I/O failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed dataset, checkpoint, or report file.
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
