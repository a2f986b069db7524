use thiserror::Error;

use crate::stability::Verdict;

pub type SimResult<T> = Result<T, SimError>;

/// Failures raised by the numerical layers. Configuration problems have their
/// own type, [`crate::config::ConfigError`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operating point did not converge (possibly bistable): last iterates Q0 = {last:e}, {previous:e}")]
    PossiblyBistable { last: f64, previous: f64 },

    #[error("refusing to run: operating point is {verdict} ({detail})")]
    Unstable { verdict: Verdict, detail: String },

    #[error("integration diverged at t = {t:e} s")]
    Diverged { t: f64 },

    #[error("eigenvalue solver did not converge")]
    EigenNonConvergence,
}

impl SimError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SimError::InvalidParameter(msg.into())
    }
}
