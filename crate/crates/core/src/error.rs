use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::formula::ParseError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("worksheet name must not be empty")]
    EmptySheetName,
    #[error("duplicate worksheet name `{0}`")]
    DuplicateSheet(String),
    #[error("no worksheet with index {0}")]
    NoSuchSheet(usize),
    #[error("duplicate assignment to cell {0}")]
    DuplicateCell(String),
    #[error("non-finite number in cell {0}")]
    NonFiniteNumber(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Failure to turn a file into a [`crate::Workbook`].
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid spreadsheet package: {0}")]
    Format(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl LoadError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        LoadError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn line(line: usize, message: impl Into<String>) -> Self {
        LoadError::Line {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown preset `{0}` (expected config1 or config2)")]
    UnknownPreset(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("threshold `{0}` must be at least 1")]
    ThresholdTooSmall(&'static str),
}
