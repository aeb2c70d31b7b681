use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A declared power-law tail is too slow for the requested integral.
    #[error("divergent tail: exponent {exponent} does not exceed {required}")]
    DivergentTail { exponent: f64, required: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
