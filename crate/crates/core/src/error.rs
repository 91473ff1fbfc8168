use thiserror::Error;

/// Errors raised by the geometric and variational routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("antipodal symmetry violated: {0}")]
    Symmetry(String),
    #[error("empty support: {0}")]
    Support(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("root not bracketed: {0}")]
    Bracket(String),
    #[error("formula validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
