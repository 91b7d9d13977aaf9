use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] lmc_core::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown integrand `{0}`")]
    UnknownFunction(String),

    #[error("need at least 4 distinct budgets spanning a decade, got {0}")]
    InsufficientSpan(String),

    #[error("MSE must be positive to fit a log-log rate, got {0}")]
    NonPositiveMse(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invalid configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use lmc_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::UnknownFunction(_) | HarnessError::Json(_) => 2,
            HarnessError::Core(
                E::InvalidConfig(_)
                | E::NotPerfectPower { .. }
                | E::DimensionMismatch { .. }
                | E::MissingExactIntegral(_)
                | E::IndexOutOfRange { .. }
                | E::ShapeMismatch(_),
            ) => 2,
            HarnessError::Core(_)
            | HarnessError::InsufficientSpan(_)
            | HarnessError::NonPositiveMse(_) => 3,
            HarnessError::Io(_) | HarnessError::Csv(_) => 1,
        }
    }
}
