use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set fails validation before any computation starts.
    #[error("invalid parameter: {0}")]
    Validation(String),

    /// A request that the crate deliberately does not support.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },

    /// A least-squares fit had too large a residual to be trusted.
    #[error("fit residual {residual:.3e} exceeds threshold {threshold:.3e} ({what})")]
    FitResidual {
        what: String,
        residual: f64,
        threshold: f64,
    },

    /// Deficit samples came out non-positive; the grid is too coarse for
    /// the requested epsilon range. Carries the offending epsilon values.
    #[error("non-positive deficit at eps = {0:?} (grid too coarse for this range)")]
    NegativeDeficit(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
