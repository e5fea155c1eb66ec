use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("grid alignment error: {0}")]
    Alignment(String),

    #[error("unsupported policy: {0}")]
    UnsupportedPolicy(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("only {completed} of {requested} episodes exited the band")]
    InsufficientEpisodes { completed: usize, requested: usize },
}

impl SimError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SimError::Domain(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::UnsupportedPolicy(_) => 2,
            _ => 3,
        }
    }
}
