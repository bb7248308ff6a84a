use std::path::PathBuf;

use thiserror::Error;

use crate::stats::StatsError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{0}")]
    Usage(String),

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unresolved reference: {0}")]
    Referential(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("forge authentication failed: {0}")]
    Auth(String),

    #[error("forge rate limit exhausted (retryable): {0}")]
    RateLimited(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error(transparent)]
    Stats(#[from] StatsError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse classes used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Transport,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Transport => 4,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::MissingFile(_) | Error::Usage(_) => ErrorCategory::Usage,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => ErrorCategory::Usage,
            Error::Auth(_) | Error::RateLimited(_) | Error::Transport(_) => {
                ErrorCategory::Transport
            }
            _ => ErrorCategory::Data,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::RateLimited(_) | Error::Transport(_))
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.to_string(),
        }
    }
}
