use thiserror::Error;

/// Errors raised by the estimators, procedures and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("degenerate scale: all observations are identical")]
    DegenerateScale,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-positive observation {value} at index {index}; shape-scale data must be > 0")]
    NonPositive { index: usize, value: f64 },

    #[error("sample size mismatch: thresholds computed for n = {expected}, sample has n = {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("missing critical value for {0}; generate it with `outlierkit simulate-critical`")]
    MissingCritical(String),

    #[error("cache format: {0}")]
    CacheFormat(String),

    #[error("cache version mismatch: file has {found}, this build reads {expected}; regenerate the cache")]
    CacheVersion { found: String, expected: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
