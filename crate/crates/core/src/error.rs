use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid tower: {0}")]
    InvalidTower(String),
    #[error("{0} is not prime")]
    NotPrime(String),
    #[error("invalid supernatural number: {0}")]
    InvalidSupernatural(String),
    #[error("point {point} outside a space of {size} points")]
    PointOutOfRange { point: u64, size: u64 },
    #[error("level {level} exceeds depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("truncation too large: {0}")]
    TooLarge(String),
    #[error("supernatural numbers differ; no bijective coarse equivalence exists")]
    NotEquivalent,
    #[error("depth exhausted: {0}")]
    DepthExhausted(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed map: {0}")]
    MalformedMap(String),
    #[error("classes live over different towers")]
    ContextMismatch,
    #[error("operators live on different spaces")]
    SpaceMismatch,
    #[error("operator has propagation {propagation} > level {level}")]
    NotBlockDiagonal { propagation: usize, level: usize },
    #[error("block {0} is not a projection")]
    NotProjection(usize),
    #[error("unsupported entries in block {0}: no exact rational similarity available")]
    UnsupportedEntries(usize),
    #[error("trace of block {0} is not an integer")]
    NonIntegralTrace(usize),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
