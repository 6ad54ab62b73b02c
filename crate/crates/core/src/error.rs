use std::path::PathBuf;

use thiserror::Error;

/// Coarse classification used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("planning error: {0}")]
    Planning(String),

    #[error("{path}: row {row}, column '{column}': {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("stage '{stage}': {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_)
            | Error::Degenerate(_)
            | Error::Validation(_)
            | Error::Planning(_)
            | Error::Parse { .. }
            | Error::Config(_) => ErrorClass::Validation,
            Error::NotFound(_) | Error::Numerical(_) => ErrorClass::Numerical,
            Error::Io { .. } => ErrorClass::Io,
            Error::Stage { source, .. } => source.class(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
