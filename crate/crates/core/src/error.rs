use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped by [`ErrorClass`] so front ends can map them onto
/// exit codes without matching every variant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unknown predicate: {0}")]
    UnknownPredicate(String),

    #[error("unknown entity: {0}")]
    UnknownEntity(String),

    #[error("fact is not a known positive: {0}")]
    NotAPositive(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) => ErrorClass::Usage,
            Error::Calibration(_) | Error::Numeric(_) => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
