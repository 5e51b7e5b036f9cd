use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential has no Hessian oracle")]
    NoHessian,

    #[error("{scheme} expects {expected} noise vector(s), got {got}")]
    NoiseArity {
        scheme: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("step produced a non-finite state")]
    NonFiniteState,

    #[error("chain diverged at step {step}")]
    Diverged { step: usize },

    #[error("covariance is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no contraction certified: {0}")]
    NoContraction(String),

    #[error("trace unusable for rate fit: {0}")]
    DegenerateTrace(String),

    #[error("no stable stepsize found below {cap}")]
    NoStableStep { cap: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
