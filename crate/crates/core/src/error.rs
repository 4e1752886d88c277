use thiserror::Error;

use crate::ancilla::AncillaOptimum;

#[derive(Debug, Error)]
pub enum CubistError {
    #[error("invalid dimension {0}: every mode needs dim >= 2")]
    InvalidDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mode {mode} out of range for a {modes}-mode state")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("Hermite order {0} exceeds the recurrence bound of 400")]
    HermiteOverflow(usize),

    #[error("Airy argument {0} outside |x| <= 40")]
    AiryDomain(f64),

    #[error("coverage: {0}")]
    Coverage(String),

    #[error("singular measurement phase (cos theta = {0:e})")]
    SingularPhase(f64),

    #[error("truncation leakage {leakage:e} exceeds tolerance {tolerance:e}")]
    Truncation { leakage: f64, tolerance: f64 },

    #[error("refinement did not converge after {iterations} iterations")]
    Convergence {
        iterations: usize,
        best: Box<AncillaOptimum>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CubistError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CubistError {
    CubistError::InvalidArgument(msg.into())
}
