use std::fmt;
use std::path::Path;

use sepnmf::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_ALGORITHM: u8 = 3;

/// A command error carrying its exit code and the stage it happened in.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub stage: &'static str,
    pub message: String,
}

pub type Outcome<T> = Result<T, Failure>;

impl Failure {
    pub fn usage(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            stage,
            message: message.into(),
        }
    }

    /// Bad input and bad options exit 2; numerical failures exit 3.
    pub fn from_lib(stage: &'static str, err: Error) -> Self {
        let code = match err {
            Error::InvalidShape(_)
            | Error::NonFinite { .. }
            | Error::DimensionMismatch(_)
            | Error::Parse(_)
            | Error::InvalidOptions(_) => EXIT_USAGE,
            Error::ZeroDirection
            | Error::ConvergenceFailure { .. }
            | Error::RankDeficiency { .. }
            | Error::MaxItersExceeded { .. } => EXIT_ALGORITHM,
        };
        Self {
            code,
            stage,
            message: err.to_string(),
        }
    }

    pub fn io(stage: &'static str, path: &Path, err: std::io::Error) -> Self {
        Self::usage(stage, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}
