use thiserror::Error;

/// Errors raised by the library. Every variant is a validation failure of
/// caller-supplied input; numerical routines never fail silently.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid probability {0}")]
    InvalidProbability(f64),

    #[error("integer overflow computing {0}")]
    Overflow(&'static str),

    #[error("arrangement not in general position: {0}")]
    NotGeneralPosition(String),

    #[error("invalid coloring: adjacent symbols {0} and {1} share a color")]
    InvalidColoring(usize, usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
