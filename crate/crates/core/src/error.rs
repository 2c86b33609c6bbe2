use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario: {0}")]
    Parse(String),

    /// A scenario invariant does not hold. `what` names the invariant,
    /// e.g. `connectivity` or `pattern.w_d`.
    #[error("invalid scenario ({what}): {detail}")]
    Validation { what: String, detail: String },

    #[error("estimator gain too small: n*k_e = {lhs} must exceed eta + 2*n*beta = {rhs}")]
    GainTooSmall { lhs: f64, rhs: f64 },

    #[error("infeasible tuning request: {0}")]
    Infeasible(String),

    #[error("follower sits on its estimated center (rho = {rho:e})")]
    DegenerateRadius { rho: f64 },

    #[error("numerical blow-up at t = {t} s")]
    NumericalBlowup { t: f64 },
}

impl Error {
    pub(crate) fn invalid(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation {
            what: what.into(),
            detail: detail.into(),
        }
    }

    /// Name of the violated invariant for validation errors.
    pub fn invariant(&self) -> Option<&str> {
        match self {
            Error::Validation { what, .. } => Some(what),
            _ => None,
        }
    }
}
