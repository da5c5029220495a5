//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the analytic, numerical and reporting layers.
#[derive(Debug, Error)]
pub enum SsissError {
    /// A parameter lies outside the documented domain of an operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A wave packet would lose normalizability (Re W <= 0).
    #[error("non-normalizable wave packet: {0}")]
    NonNormalizable(String),
    /// Amplitude reaches the edge of the periodic box.
    #[error("boundary leak: {0}")]
    BoundaryLeak(String),
    /// Two grids, or a grid and a state, do not match.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A scenario name is not registered.
    #[error("unknown scenario: {0}")]
    UnknownScenario(String),
    /// Configuration text could not be parsed or applied.
    #[error("config error: {0}")]
    Config(String),
    /// Serialization or deserialization failure.
    #[error("serialization error: {0}")]
    Serialization(String),
    /// Filesystem failure while emitting artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for SsissError {
    fn from(e: serde_json::Error) -> Self {
        SsissError::Serialization(e.to_string())
    }
}

impl From<csv::Error> for SsissError {
    fn from(e: csv::Error) -> Self {
        SsissError::Serialization(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SsissError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SsissError {
    SsissError::InvalidParameter(msg.into())
}
