use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("budget exceeded: {what} needs about {needed:.3e} nodes, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: f64,
        budget: u64,
    },

    #[error("potential is singular at {x} (within {radius:e} of a critical point)")]
    Singularity { x: f64, radius: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("ambiguous comparison: {0}")]
    Ambiguous(String),

    #[error("power iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    Convergence { iterations: usize, last_change: f64 },

    #[error("parse error at `{token}`: {reason}")]
    Parse { token: String, reason: String },
}

impl Error {
    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
