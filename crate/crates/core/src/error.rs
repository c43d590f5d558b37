use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates the domain of a formula (p <= 2, t <= 0, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A scenario or problem definition is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator gave up (step size underflow, non-finite state).
    #[error("solver failure at t = {t}: {reason}")]
    Solver { t: f64, reason: String },

    /// Two independent closed forms disagree; always an implementation bug.
    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
