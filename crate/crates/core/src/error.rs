use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} at step {step} is outside [{lo}, {hi}]")]
    OutOfRange {
        step: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("sequence too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("history window has {got} samples but {need} are required (seed the history first)")]
    ColdStart { need: usize, got: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("objective matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
