use std::path::PathBuf;

use thiserror::Error;

use crate::garch::GarchFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Equal tail orders with both tail order parameters zero or both infinite.
    #[error("excluded degenerate pair: equal tail orders with (lambda1, lambda2) = ({lambda1}, {lambda2})")]
    DegeneratePair { lambda1: f64, lambda2: f64 },

    #[error("tail order parameter must be positive (got {0})")]
    DegenerateLambda(f64),

    #[error("no admissible epsilon: {0}")]
    EmptyEpsilonInterval(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("GARCH fit did not converge after {restarts} restarts (best loglik {})", best.loglik)]
    FitNotConverged { restarts: usize, best: Box<GarchFit> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse classification used by the command-line front end.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter { .. } | Error::EmptyEpsilonInterval(_) => ErrorKind::Usage,
            Error::Data(_) | Error::Io { .. } => ErrorKind::Data,
            Error::DegeneratePair { .. }
            | Error::DegenerateLambda(_)
            | Error::Degenerate(_)
            | Error::Numerical(_)
            | Error::FitNotConverged { .. } => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}
