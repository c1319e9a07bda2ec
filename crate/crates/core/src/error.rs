use thiserror::Error;

/// Errors produced by the learners, environments and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("environment error: {0}")]
    Environment(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("infeasible confidence set: {0}")]
    InfeasibleConfidenceSet(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
