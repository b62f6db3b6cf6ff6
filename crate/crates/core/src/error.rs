use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("validation failed for `{field}`: {message}")]
    Validation { field: &'static str, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("covariance lost positive semidefiniteness: {0}")]
    NotPsd(String),

    #[error("configuration error: {message}")]
    Config {
        message: String,
        paths: Vec<PathBuf>,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn invalid(field: &'static str, msg: impl Into<String>) -> Self {
        Error::Validation {
            field,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
