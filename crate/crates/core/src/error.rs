use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown emotion '{0}'")]
    UnknownEmotion(String),

    #[error("unknown word '{0}'")]
    UnknownWord(String),

    #[error(
        "empty constraint set: no lexicon word with an emotion anchor was found in the vocabulary"
    )]
    EmptyConstraintSet,

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("non-finite value in epoch {epoch}, row {row} ({token})")]
    NumericalAbort {
        epoch: usize,
        row: usize,
        token: String,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
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
}
