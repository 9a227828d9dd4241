use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size mismatch: {left} elements vs {right} elements")]
    SizeMismatch { left: usize, right: usize },

    #[error("element {id} out of range for n = {n}")]
    OutOfRange { id: usize, n: usize },

    #[error("pair ({0}, {0}) is a self-pair")]
    SelfPair(usize),

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("search space of {space} assignments exceeds the limit of {limit}")]
    SearchSpaceTooLarge { space: f64, limit: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
