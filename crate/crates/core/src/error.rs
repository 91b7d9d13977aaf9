use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{value} is not a perfect {dim}-th power")]
    NotPerfectPower { value: u64, dim: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least 2 samples for an empirical standard deviation, got {0}")]
    TooFewSamples(usize),

    #[error("all per-stratum standard deviations are zero")]
    AllZeroVariation,

    #[error("integrand `{0}` has no gradient")]
    MissingGradient(String),

    #[error("integrand `{0}` has no exact integral")]
    MissingExactIntegral(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
