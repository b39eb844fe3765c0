use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VitsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("reward {0} is not binary (logistic model expects 0 or 1)")]
    NonBinaryReward(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is singular: {0}")]
    Singular(&'static str),

    #[error("smallest eigenvalue of the Gram matrix fell to {0:e}")]
    NumericalFloor(f64),

    #[error("inverse approximation diverged: |CB - I|_F = {0:.4}")]
    InverseDrift(f64),

    #[error("diverged: {0}")]
    Diverged(String),

    #[error("empty arm set")]
    EmptyArmSet,

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("asymmetric input: max |M - M^T| = {0:e}")]
    Asymmetric(f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),
}

pub type Result<T> = std::result::Result<T, VitsError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> VitsError {
    VitsError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
