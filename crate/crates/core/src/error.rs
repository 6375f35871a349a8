use thiserror::Error;

pub type Result<T> = std::result::Result<T, MipError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MipError {
    #[error("ground set must have at least one element")]
    EmptyGroundSet,
    #[error("labels: expected {expected} distinct labels, got {got}")]
    InvalidLabels { expected: usize, got: usize },
    #[error("index {index} out of range for a ground set of size {n}")]
    InvalidIndex { index: usize, n: usize },
    #[error("ground set of size {n} has no bipartition (need at least {min})")]
    GroundSetTooSmall { n: usize, min: usize },
    #[error("subset belongs to a ground set of size {got}, expected {expected}")]
    GroundSizeMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (entry ({row},{col}) differs by {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("matrix is singular even after jitter {jitter:e}")]
    Singular { jitter: f64 },
    #[error("subset must be a proper, nonempty subset of the ground set")]
    EmptyOrFullSubset,
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid probability table: {0}")]
    InvalidDistribution(String),
    #[error("blocks do not form a partition of the ground set")]
    NotAPartition,
    #[error("k = {k} is out of range for n = {n} (need 2 <= k <= n)")]
    KOutOfRange { k: usize, n: usize },
    #[error("n = {n} exceeds the exhaustive-search cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("fewer than two effective elements")]
    FewerThanTwoElements,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trajectory diverged at step {step}, site {site} (value {value:e})")]
    Divergence { step: usize, site: usize, value: f64 },
}

impl MipError {
    /// True for failures caused by the numbers themselves rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, MipError::Singular { .. } | MipError::Divergence { .. })
    }
}
