//! Error type shared by every module in this crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trace context: {0}")]
    InvalidContext(String),

    #[error("element does not respect the block structure: {0}")]
    BlockViolation(String),

    #[error("context mismatch: {0}")]
    ContextMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("element is not hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("element is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("element is not a projection (deviation {deviation:.3e})")]
    NotProjection { deviation: f64 },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("superoperator is not block respecting (coordinate ({row}, {col}), magnitude {magnitude:.3e})")]
    NotBlockRespecting { row: usize, col: usize, magnitude: f64 },

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("fixed-point splitting failed: {0}")]
    SplittingFailed(String),

    #[error("semigroup law violated: {0}")]
    SemigroupLaw(String),

    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("numerical inconsistency: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
