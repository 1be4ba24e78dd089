use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of bounds for dimension {dim}")]
    IndexOutOfBounds { index: usize, dim: usize },

    #[error("dilation radius must be nonnegative, got {0}")]
    NegativeRadius(f64),

    #[error("generator budget {budget} is below the set dimension {dim}")]
    BudgetTooSmall { budget: usize, dim: usize },

    #[error("control window is empty")]
    EmptyWindow,

    #[error("generator basis needs at least 2 directions, got {0}")]
    BasisTooSmall(usize),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("linear program exceeded the iteration limit")]
    LpDidNotConverge,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("degenerate scenario geometry: {0}")]
    DegenerateScenario(String),

    #[error("run record is empty or incomplete: {0}")]
    EmptyRecord(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("record file not found: {0}")]
    MissingRecordFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
