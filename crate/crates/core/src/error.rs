use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum KhaosError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input out of [0,1] at row {row}, column {col}: {value}")]
    Domain { row: usize, col: usize, value: f64 },

    #[error("candidate set has {cardinality} terms, above the cap of {cap}")]
    Capacity { cardinality: u128, cap: u128 },

    #[error("numerical rank failure: {0}")]
    NumericalRank(String),

    #[error("no convergence after {iterations} iterations (last iterate {last})")]
    Convergence { iterations: usize, last: f64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("schema mismatch: missing {missing:?}, extra {extra:?}")]
    Schema {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl KhaosError {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            KhaosError::NumericalRank(_) | KhaosError::Convergence { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, KhaosError>;
