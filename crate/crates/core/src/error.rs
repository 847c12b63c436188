use thiserror::Error;

/// Errors raised by the library. Validation problems with a whole system are
/// reported through [`crate::system::ValidationReport`] instead.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CbdError {
    #[error("cannot parse `{0}` as a rational number")]
    BadRational(String),
    #[error("unknown content `{0}`")]
    UnknownContent(String),
    #[error("unknown context `{0}`")]
    UnknownContext(String),
    #[error("content id `{0}` is already in use")]
    IdCollision(String),
    #[error("invalid value set: {0}")]
    InvalidValueSet(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid value subset: {0}")]
    InvalidSubset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("system has {found} random variables, above the cap of {cap}")]
    TooManyVariables { found: usize, cap: usize },
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = CbdError> = std::result::Result<T, E>;
