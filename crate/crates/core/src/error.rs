use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("coercivity violated: {0}")]
    Coercivity(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value at node {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("value out of floating-point range: {0}")]
    Range(String),

    #[error("tensor grid of {points} points exceeds the budget of {budget}")]
    GridBudget { points: f64, budget: f64 },

    #[error("{context}")]
    Node {
        index: usize,
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (coercivity, solver, overflow) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Coercivity(_)
            | Error::NonConvergence { .. }
            | Error::NonFinite { .. }
            | Error::Range(_) => true,
            Error::Node { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
