//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate direction: zero-length vector has no angles")]
    DegenerateDirection,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inconsistent delay: path length {path_length} m is shorter than the direct distance {direct} m")]
    InconsistentDelay { path_length: f64, direct: f64 },

    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("zero-length propagation leg: {0}")]
    ZeroLengthLeg(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown config key: {0}")]
    UnknownKey(String),

    #[error("link {link} (drop {drop}): {source}")]
    Link {
        drop: usize,
        link: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse error classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Io,
    Simulation,
    Input,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Simulation => 4,
            ErrorCategory::Input => 5,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::UnknownKey(_) => ErrorCategory::Config,
            Error::Io { .. } => ErrorCategory::Io,
            Error::Csv(_) | Error::EmptyInput(_) | Error::MalformedTable(_) => ErrorCategory::Input,
            Error::Link { source, .. } => match source.category() {
                ErrorCategory::Io => ErrorCategory::Io,
                _ => ErrorCategory::Simulation,
            },
            Error::DegenerateDirection
            | Error::InvalidInput(_)
            | Error::InconsistentDelay { .. }
            | Error::ZeroLengthLeg(_) => ErrorCategory::Simulation,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
