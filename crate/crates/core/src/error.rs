use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: {qubits} qubits above dense limit {limit}")]
    Capacity { qubits: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("moment matrix is numerically singular at K={k} (condition {condition:e}); use a smaller K")]
    DegenerateMoments { k: usize, condition: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no root in domain: {0}")]
    NoRoot(String),

    #[error("block condition violated between levels {lambda} and {lambda_prime}: {detail}")]
    ConditionViolation {
        lambda: usize,
        lambda_prime: usize,
        detail: String,
    },

    #[error("step instability: {0}")]
    StepInstability(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    /// True for failures that a caller should report as non-convergence.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::StepInstability(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
