use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The requested fit cannot be carried out on the given data
    /// (too few observations, no admissible segmentation, ...).
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// The model violates the nonzero-jump identifiability condition.
    #[error("identifiability: {0}")]
    Identifiability(String),
    /// A numerical routine failed to reach its target accuracy or hit a
    /// degenerate configuration (singular matrix, degenerate residuals, ...).
    #[error("numeric: {0}")]
    Numeric(String),
    /// Too many replications of an experiment failed.
    #[error("failure budget exceeded: {0}")]
    FailureBudget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
