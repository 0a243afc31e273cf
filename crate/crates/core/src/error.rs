use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BecError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent series: {0}")]
    DivergentSeries(String),

    #[error("no convergence after {iterations} iterations: {what}")]
    ConvergenceFailure { what: String, iterations: usize },

    #[error("quadrature failed: estimated error {error_estimate:e} on value {value:e}")]
    QuadratureFailure { value: f64, error_estimate: f64 },

    #[error("potential is not of positive type: {0}")]
    NotPositiveType(String),

    #[error("search produced no finite quotient")]
    EmptySearch,

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("mode count {count} exceeds capacity {capacity}")]
    CapacityExceeded { count: u64, capacity: u64 },

    #[error("log-domain overflow at N = {n}")]
    OverflowGuard { n: usize },

    #[error("truncation: probability weight {tail_weight:e} at n_max = {n_max} exceeds {bound:e}")]
    Truncation {
        tail_weight: f64,
        n_max: usize,
        bound: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, BecError>;

pub(crate) fn domain(msg: impl Into<String>) -> BecError {
    BecError::Domain(msg.into())
}
