use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Minimum distance asked of a codebook with fewer than two words.
    #[error("minimum distance is undefined for a codebook of {0} word(s)")]
    UndefinedDistance(usize),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    /// The exact search would need to enumerate more vertices than it supports.
    #[error("M = {m} exceeds the exact search capacity (M <= {max})")]
    Capacity { m: usize, max: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
