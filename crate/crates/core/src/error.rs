use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value {value} at coordinate {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("empty point: dimension must be at least 1")]
    EmptyPoint,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("block count mismatch: expected {expected}, found {found}")]
    BlockCountMismatch { expected: usize, found: usize },

    #[error("product space needs at least 2 blocks, got {0}")]
    TooFewBlocks(usize),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("operator list is empty")]
    EmptyOperatorList,

    #[error("input is not in the diagonal complement: |block sum| = {residual:e}")]
    NotInDiagonalComplement { residual: f64 },

    #[error("root solver failed to bracket the projection onto epi exp from ({a}, {b})")]
    RootBracket { a: f64, b: f64 },

    #[error("operator is not claimed firmly nonexpansive")]
    NotFirmlyNonexpansive,

    #[error(
        "monotonicity violated by sample pair ({first}, {second}): inner product {value:e}"
    )]
    MonotonicityViolation {
        first: usize,
        second: usize,
        value: f64,
    },

    #[error("matrix of size {size} exceeds the materialization guard {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("rank detection failed: factor diagonal {diagonal:e} below threshold")]
    RankDetection { diagonal: f64 },

    #[error("trace too short: {0} recorded iterates")]
    TraceTooShort(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
