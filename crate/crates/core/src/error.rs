use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: no data rows")]
    EmptyInput(PathBuf),

    #[error("{path}: line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: line {line}, column {column}: missing value {token:?}")]
    MissingValue {
        path: PathBuf,
        line: usize,
        column: usize,
        token: String,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("invalid flip: {0}")]
    InvalidFlip(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what} requires {required}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("dimension mismatch: {0}")]
    Shape(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error class: 2 configuration,
    /// 3 resource cap, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 4,
            Error::CapExceeded { .. } => 3,
            Error::Parse { .. }
            | Error::EmptyInput(_)
            | Error::RaggedRow { .. }
            | Error::MissingValue { .. } => 4,
            _ => 2,
        }
    }
}
