use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    #[error("breakout is infeasible at a full buffer (q_len = {q_len})")]
    InvalidAction { q_len: usize },

    #[error("queue length {q_len} outside [0, {buffer_size}]")]
    InvalidState { q_len: usize, buffer_size: usize },

    #[error("value iteration did not converge within {iterations} iterations")]
    NotConverged { iterations: u64 },

    #[error("sweep aborted at {axis} = {value}: {source}")]
    SweepPoint {
        axis: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable tag, used by the CLI's error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams { .. } => "invalid_params",
            Error::InvalidAction { .. } => "invalid_action",
            Error::InvalidState { .. } => "invalid_state",
            Error::NotConverged { .. } => "not_converged",
            Error::SweepPoint { .. } => "sweep_point",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
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
}
