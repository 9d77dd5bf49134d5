use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range configuration (unknown family, missing parameter, bad grid).
    #[error("configuration error: {0}")]
    Config(String),
    /// A point outside the domain where a potential is defined.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("field has no strictly positive value; regularize before building the kernel")]
    EmptyActiveSet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
