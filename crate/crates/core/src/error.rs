//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Input is outside the mathematical domain of the operation
    /// (zero-norm vector, empty sentence, non-positive temperature, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A NaN or infinity was produced or encountered where finite values
    /// are required. Training treats this as divergence.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Malformed or inconsistent data files.
    #[error("data error: {0}")]
    Data(String),

    /// Invalid configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
