use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inconsistent layout, binding, or element configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Circuit file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An operation was called on a state that violates its documented input
    /// condition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Unphysical parameters or a quantity that cannot be evaluated.
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// A measurement record that no basis input can produce.
    #[error("inconsistent outcome: {0}")]
    InconsistentOutcome(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericDomain(_) => 3,
            _ => 2,
        }
    }
}
