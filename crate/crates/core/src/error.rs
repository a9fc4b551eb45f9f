use thiserror::Error;

/// Failures raised by the solvers and simulators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("root not bracketed on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("quadrature did not converge: estimate {value} with error {error}")]
    Quadrature { value: f64, error: f64 },

    #[error("expected a monotone function: {0}")]
    NotMonotone(&'static str),

    #[error("insufficient tail mass: {usable} usable thresholds, need at least {needed}")]
    InsufficientTail { usable: usize, needed: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error comes from input validation rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
