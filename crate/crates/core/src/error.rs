use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error categories map onto CLI exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("no records in {}", .0.display())]
    NoRecords(PathBuf),

    #[error("column-count mismatch at line {line}: expected {expected}, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("unparseable numeric field at line {line}, column {column}: {value:?}")]
    ParseNumeric {
        line: usize,
        column: String,
        value: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("unknown variable {0:?}")]
    UnknownVariable(String),

    #[error("unseen category {value:?} for variable {variable:?}")]
    UnseenCategory { variable: String, value: String },

    #[error("io error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 data, 4 numeric, 1 anything else (I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Cycle(_) | Error::UnknownVariable(_) => 2,
            Error::MissingFile(_)
            | Error::NoRecords(_)
            | Error::ColumnCount { .. }
            | Error::ParseNumeric { .. }
            | Error::Data(_)
            | Error::UnseenCategory { .. }
            | Error::Csv(_) => 3,
            Error::Numeric(_) => 4,
            Error::Io { .. } | Error::Json(_) => 1,
        }
    }
}
