use thiserror::Error;

/// Errors raised by the solvers in this crate.
///
/// Variants fall into two families: input validation (the caller asked for
/// something outside an operation's domain) and numerical failure (the input
/// was fine but an iteration did not settle). [`Error::is_validation`]
/// distinguishes them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimer counts {counts:?} violate the hard-core constraints for N_A={n_a}, N_B={n_b}")]
    HardCore {
        counts: [u64; 3],
        n_a: u64,
        n_b: u64,
    },

    #[error("point {point:?} lies outside the admissible density region for alpha={alpha}")]
    OutsideDomain { point: [f64; 3], alpha: f64 },

    #[error("{what} requires an interior point, got {point:?}")]
    BoundaryPoint { what: &'static str, point: [f64; 3] },

    #[error("N={n} exceeds the {what} cap of {cap}")]
    ResourceCap { what: &'static str, n: u64, cap: u64 },

    #[error("weight matrix is not positive definite: h_A + h_B = {sum} must exceed 2 h_AB = {twice_mixed}")]
    NotPositiveDefinite { sum: f64, twice_mixed: f64 },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("{0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True when the error stems from bad input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NoConvergence { .. } | Error::NoBracket { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
