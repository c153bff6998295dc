use thiserror::Error;

/// Errors raised across estimation, decision, simulation and batch assessment.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient data: {context} needs at least {needed} values, got {got}")]
    InsufficientData {
        context: String,
        needed: usize,
        got: usize,
    },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's JSON error channel.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InsufficientData { .. } => "InsufficientData",
            Error::DegenerateSample(_) => "DegenerateSample",
            Error::Domain(_) => "DomainError",
            Error::CalibrationFailure(_) => "CalibrationFailure",
            Error::Parse { .. } => "ParseError",
            Error::Consistency(_) => "ConsistencyError",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn insufficient(context: impl Into<String>, needed: usize, got: usize) -> Self {
        Error::InsufficientData {
            context: context.into(),
            needed,
            got,
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
