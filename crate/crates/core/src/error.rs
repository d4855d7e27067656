use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("linear solver failed: {reason} (relative residual {residual:.3e}, condition lower bound {condition_estimate:.3e})")]
    Solver {
        reason: String,
        residual: f64,
        condition_estimate: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Training { epoch: usize, loss: f64 },

    #[error("error measure undefined: {0}")]
    Measure(String),

    #[error("archive {path}: {reason}")]
    Archive { path: PathBuf, reason: String },

    #[error("snapshot {index} failed: {source}")]
    Snapshot {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes and C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Argument,
    Config,
    Numerical,
    Archive,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Argument,
            Error::Config(_) | Error::Json(_) => ErrorKind::Config,
            Error::NumericDomain(_)
            | Error::Solver { .. }
            | Error::Training { .. }
            | Error::Measure(_) => ErrorKind::Numerical,
            Error::Archive { .. } => ErrorKind::Archive,
            Error::Io(_) => ErrorKind::Io,
            Error::Snapshot { source, .. } | Error::Stage { source, .. } => source.kind(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
