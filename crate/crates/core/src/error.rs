use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric precondition (norm bound, finiteness, range) was violated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The pool was driven out of its lifecycle order.
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("insufficient samples: need {required}, have {available}")]
    InsufficientSamples { required: usize, available: usize },

    #[error("solver did not converge after {iterations} iterations (gradient mapping norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A theoretical guarantee that must hold on every run did not.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    /// Wraps an error raised while running one seed of an experiment.
    #[error("seed {seed}, interval {interval}: {source}")]
    Run {
        seed: u64,
        interval: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach seed and interval context.
    pub fn in_run(self, seed: u64, interval: usize) -> Self {
        match self {
            e @ Error::Run { .. } => e,
            e => Error::Run {
                seed,
                interval,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, skipping run context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Run { source, .. } => source.root(),
            e => e,
        }
    }
}
