use thiserror::Error;

#[derive(Debug, Error)]
pub enum CcbError {
    /// Malformed numeric input (non-finite values, broken simplex, out-of-range observation).
    #[error("validation error: {0}")]
    Validation(String),

    /// An experiment or regime configuration that cannot be run.
    #[error("config error: {0}")]
    Config(String),

    /// Feedback delivered out of order with respect to the last decision.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// The benchmark program has no feasible point.
    #[error("certified infeasible: {0}")]
    Infeasible(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CcbError {
    /// Whether the error stems from user input (bad config, bad arguments) as
    /// opposed to a failure during execution.
    pub fn is_input_error(&self) -> bool {
        matches!(self, CcbError::Validation(_) | CcbError::Config(_) | CcbError::Json(_))
    }
}

pub type Result<T, E = CcbError> = std::result::Result<T, E>;
