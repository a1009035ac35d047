use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in the fingering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid spelled pitch {token:?}: {reason}")]
    Pitch { token: String, reason: &'static str },

    #[error("empty note sequence")]
    EmptySequence,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("label {label} out of range 1..={k}")]
    Label { label: u8, k: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("pruning removed every successor at position {0}")]
    NoFeasibleFinger(usize),

    #[error("generator dead end: {0}")]
    DeadEnd(String),

    #[error("cannot split {scores} scores into {folds} folds")]
    Folds { folds: usize, scores: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("missing predictions for: {0:?}")]
    MissingPredictions(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad input data rather than numerics or usage.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Pitch { .. }
                | Error::EmptySequence
                | Error::Label { .. }
                | Error::Length { .. }
                | Error::Checkpoint(_)
                | Error::MissingPredictions(_)
                | Error::Io { .. }
                | Error::Json { .. }
                | Error::Folds { .. }
                | Error::DeadEnd(_)
                | Error::Dimension(_)
        )
    }

    pub fn is_numeric_error(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::NoFeasibleFinger(_))
    }
}
