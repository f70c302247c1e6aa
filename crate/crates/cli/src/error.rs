use std::fmt;

use outlierkit_core::Error;

/// A failed run, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Usage or configuration problem (exit 1).
    Config(String),
    /// Input data problem (exit 2).
    Data(String),
    /// Broken internal invariant (exit 3).
    Invariant(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::Invariant(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::EmptySample | Error::DegenerateScale | Error::NonPositive { .. } | Error::Domain(_) => {
                Failure::Data(msg)
            }
            Error::SizeMismatch { .. } => Failure::Invariant(msg),
            Error::Config(_)
            | Error::MissingCritical(_)
            | Error::CacheFormat(_)
            | Error::CacheVersion { .. }
            | Error::Io(_) => Failure::Config(msg),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;
