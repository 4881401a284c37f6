use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("subset rank {rank} out of range for C({universe}, {size})")]
    RankOutOfRange {
        rank: u64,
        universe: usize,
        size: usize,
    },
    #[error("no full-rank channel found after {0} resamples")]
    DegenerateField(usize),
    #[error("no zero-forcing vector avoids every target user")]
    NonOrthogonalityFailure,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parameters outside the formula's region: {0}")]
    OutOfRegion(String),
    #[error("no cache probability solves the memory constraint: {0}")]
    NoRoot(String),
    #[error("decode system for user {user} is singular ({detail})")]
    SingularDecode { user: usize, detail: String },
    #[error("user {user} lacks key {key}")]
    MissingKey { user: usize, key: String },
    #[error("user {user} could not recover every fragment of file {file}")]
    IncompleteFile { user: usize, file: usize },
    #[error("fragment counter exhausted for {0}")]
    CounterExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
