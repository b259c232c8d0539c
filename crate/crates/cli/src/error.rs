//! Front-end errors and their exit codes.

use charp_heights::{Error, ErrorKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{0}")]
    Core(#[from] Error),

    /// Failed checks, with the full report for stdout.
    #[error("verification failed: {failed}")]
    Verify { failed: String, report: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 1 verification failure, 2 input, 3 mathematical precondition,
    /// 4 precision, 5 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify { .. } => 1,
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Math => 3,
                ErrorKind::Precision => 4,
                ErrorKind::Internal => 5,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_mapping() {
        assert_eq!(CliError::Parse("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(Error::DivisionByZero).exit_code(), 2);
        assert_eq!(
            CliError::Core(Error::Supersingular("t".into())).exit_code(),
            3
        );
        assert_eq!(CliError::Core(Error::NotMinimal("t".into())).exit_code(), 3);
        assert_eq!(CliError::Core(Error::Precision("z".into())).exit_code(), 4);
        assert_eq!(CliError::Core(Error::CapExceeded(10)).exit_code(), 4);
        assert_eq!(
            CliError::Verify {
                failed: "a".into(),
                report: String::new()
            }
            .exit_code(),
            1
        );
    }
}
