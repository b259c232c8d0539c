use thiserror::Error;

/// Errors raised by the arithmetic kernel and the height machinery.
///
/// The variants are grouped so front ends can map them to exit codes:
/// input problems, mathematical preconditions, and precision exhaustion.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("division by zero")]
    DivisionByZero,

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("curve is supersingular at {0}")]
    Supersingular(String),

    #[error("model is not minimal: {0}")]
    NotMinimal(String),

    #[error("model is not integral at {0}")]
    NotIntegral(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("point has singular reduction at {0}")]
    SingularReduction(String),

    #[error("insufficient precision: {0}")]
    Precision(String),

    #[error("search cap of {0} exceeded")]
    CapExceeded(u64),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn syntax(pos: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    /// Broad category used by front ends.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax { .. }
            | Error::DivisionByZero
            | Error::InvalidField(_)
            | Error::InvalidInput(_) => ErrorKind::Input,
            Error::Precision(_) | Error::CapExceeded(_) => ErrorKind::Precision,
            Error::Internal(_) => ErrorKind::Internal,
            _ => ErrorKind::Math,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Math,
    Precision,
    Internal,
}

pub type Result<T> = std::result::Result<T, Error>;
