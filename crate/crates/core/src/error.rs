use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Smallest singular value fell below the rank tolerance.
    #[error("data matrix is rank deficient: s_min = {s_min:e}, s_max = {s_max:e}")]
    RankDeficient { s_min: f64, s_max: f64 },

    /// Friction below critical damping for eigendirection `index`.
    #[error("underdamped momentum at index {index}: mu = {mu}, 2*sqrt(s) = {critical}")]
    Underdamped { index: usize, mu: f64, critical: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance is not positive semidefinite: {0}")]
    NotPsd(String),

    /// Effective regularizer is unbounded at t = 0.
    #[error("effective regularizer is infinite at t = 0")]
    InfiniteRegularization,

    #[error("MGD diverged at iteration {iteration}: |beta| = {norm:e} exceeds {limit:e}")]
    Diverged { iteration: usize, norm: f64, limit: f64 },

    #[error("non-finite integrand value {value} at s = {s}")]
    NonFinite { s: f64, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects non-positive or non-finite values.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {value}")))
    }
}

pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be nonnegative and finite, got {value}")))
    }
}
