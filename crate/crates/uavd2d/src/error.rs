//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures surfaced by the numerical and modelling routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iteration did not reach its stopping rule within its cap.
    #[error("non-convergence in {what} after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("tolerance not met: estimate {estimate:e}, error bound {error_bound:e}")]
    Tolerance { estimate: f64, error_bound: f64 },

    /// The root bracket could not be established (or expanded) around the target.
    #[error("bracket failure: {0}")]
    Bracket(String),

    /// Invalid scenario configuration or configuration text.
    #[error("configuration error: {0}")]
    Config(String),

    /// An exhaustive search was requested on an instance that is too large.
    #[error("instance too large: {0}")]
    SizeGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
