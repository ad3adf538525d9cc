//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by the arithmetic, encoding, spectral, and protocol layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (bad arguments, mismatched algebras, ...).
    #[error("usage: {0}")]
    Usage(String),

    /// A mathematical invariant that should hold by construction failed.
    /// Indicates a bug or corrupted input data, not a user mistake.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Simultaneous diagonalization failed to reach the requested tolerance.
    #[error("spectral failure: {0}")]
    Spectral(String),

    /// A bill or bolt was rejected by a verifier.
    #[error("verification rejected: {0}")]
    Rejected(String),

    /// Cache or serialization problem.
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
