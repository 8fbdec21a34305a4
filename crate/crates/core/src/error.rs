use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps these onto its exit-code contract: `Parse` and `Usage` exit
/// with 2, `Internal` with 3; verification failures are not errors but
/// reported outcomes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("operation requires {expected} parameter(s), system has {found}")]
    UnsupportedParameterCount { expected: usize, found: usize },

    #[error("degenerate parameter value {0}: leading coefficient vanishes identically in t")]
    DegenerateParameter(String),

    #[error("integration failed at t = {t}: {message}")]
    Integration { t: f64, message: String },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
