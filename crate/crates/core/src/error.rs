use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Pauli string {text:?}: {reason}")]
    PauliParse { text: String, reason: String },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("{n} qubits exceeds the supported maximum of {max}")]
    TooManyQubits { n: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Lie closure truncated at dimension cap {cap}")]
    Truncated { cap: usize },

    #[error("outside theory: {0}")]
    OutsideTheory(String),

    #[error("state is not a weight state: commutator residual {residual:.3e}")]
    NotWeightState { residual: f64 },

    #[error("eigenvalue clustering failed; spectral gaps {gaps:?}")]
    Clustering { gaps: Vec<f64> },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
