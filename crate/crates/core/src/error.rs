use thiserror::Error;

/// Errors produced by the numerical and combinatorial routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An adaptive integration hit its subdivision limit before reaching tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, achieved error {error:e}, requested {requested:e}")]
    NonConvergence {
        estimate: f64,
        error: f64,
        requested: f64,
    },

    /// A requested tolerance cannot be met below the configured truncation cap.
    #[error("tolerance {target:e} unreachable within cap {cap} (best achievable {achieved:e})")]
    Infeasible {
        target: f64,
        achieved: f64,
        cap: u64,
    },

    /// An exhaustive enumeration would exceed its configured size cap.
    #[error("enumeration over N = {requested} periods exceeds the cap of {cap}")]
    CapExceeded { requested: usize, cap: usize },

    /// A coefficient table does not match the level or parameters it is used with.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A bracketing search found endpoints that do not straddle the target.
    #[error("bracket [{lo}, {hi}] does not straddle the target")]
    Bracket { lo: f64, hi: f64 },

    /// A textual specification could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
