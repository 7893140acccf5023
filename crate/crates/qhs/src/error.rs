//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, derivative estimation, system evaluation,
/// solvers, and the CLI config layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An input vector or matrix has the wrong dimension.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is not defined for the given object (e.g. sampling an
    /// unbounded set).
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),

    /// An evaluation produced a non-finite value or hit a guarded domain
    /// boundary (division by ~0, overflowing power).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// A solver exhausted its budget without an acceptable result.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Expression syntax or arity error, with a byte offset into the source.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Config file violates the schema; `path` names the offending field.
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            got,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
