//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A dimension or count that must be positive was zero.
    #[error("{what} must be at least 1")]
    InvalidCount { what: &'static str },

    /// Polynomial degree exceeds the supported moment envelope.
    #[error("polynomial degree {degree} exceeds the supported envelope of {max}")]
    DegreeOverflow { degree: usize, max: usize },

    /// Moment order exceeds the supported envelope.
    #[error("normal moment of order {order} unsupported (max {max})")]
    UnsupportedMoment { order: usize, max: usize },

    /// A variable index fell outside the scale vector.
    #[error("variable index {index} out of range for {len} scales")]
    IndexOutOfRange { index: usize, len: usize },

    /// The model exposes no analytic Hessian and finite differences were
    /// disabled.
    #[error("analytic hessian unavailable and finite differences disabled")]
    HessianUnavailable,

    /// The optimizer left the trust region.
    #[error("optimization diverged at iteration {iter}: |lambda| exceeded {bound:e}")]
    Diverged { iter: usize, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
