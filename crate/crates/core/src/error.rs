use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum LaqccError {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    Index { index: usize, num_qubits: usize },

    #[error("infeasible branch: outcome has probability {probability:e}")]
    InfeasibleBranch { probability: f64 },

    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),

    #[error("malformed program: {0}")]
    MalformedProgram(String),

    #[error("circuit shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("gates do not commute: {0}")]
    NonCommuting(String),

    #[error("classical function `{0}` has no circuit form")]
    NoCircuitForm(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("branch frontier exceeded {0} live branches")]
    FrontierExceeded(usize),

    #[error("register `{0}` is entangled with the rest of the state")]
    Entangled(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LaqccError>;
