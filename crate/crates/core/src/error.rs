use thiserror::Error;

/// Errors raised by the accounting, calibration and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrivacyError {
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: u64, n: u64 },

    #[error("{noise} noise requires {expected} geometry")]
    GeometryMismatch {
        noise: &'static str,
        expected: &'static str,
    },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no root: {0}")]
    NoRoot(String),
}

impl PrivacyError {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        PrivacyError::Domain {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = PrivacyError> = std::result::Result<T, E>;
