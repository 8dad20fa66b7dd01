use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("window not full: {len} of {capacity} frames")]
    WindowNotFull { len: usize, capacity: usize },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model version mismatch: expected `{expected}`, found `{found}`")]
    VersionMismatch { expected: String, found: String },

    #[error("shape inconsistency: {0}")]
    Shape(String),

    #[error("truncated model file: {0}")]
    Truncated(String),

    #[error("non-finite {what} (model corrupted or diverged)")]
    NonFiniteIntermediate { what: &'static str },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("timestamp regression: {t_ms} ms after {last_ms} ms")]
    TimestampRegression { last_ms: i64, t_ms: i64 },

    #[error("conflicting sentence rows for key `{key}`: line {first_line} `{first}` vs line {second_line} `{second}`")]
    SentenceConflict {
        key: String,
        first_line: usize,
        first: String,
        second_line: usize,
        second: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
