use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no solution: target is not in the row space")]
    NoSolution,

    #[error("row space is trivial")]
    RankZero,

    #[error("input too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid bound: {0}")]
    InvalidBound(String),

    #[error("node index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("erasure pattern is not correctable")]
    NotCorrectable,

    #[error("checksum mismatch in shard {0}")]
    ChecksumMismatch(usize),

    #[error("shard {index} has length {actual}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },

    #[error("payload is empty")]
    EmptyPayload,

    #[error("node {0} has no repair group within the search bound")]
    Unrepairable(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
