use thiserror::Error;

/// Errors produced by the corridor library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported snapshot version {found:?} (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn violation(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}
