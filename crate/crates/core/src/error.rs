use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("resonance singularity at t2 = {t2}: |L| = {l_abs:e} below guard")]
    Singularity { t2: f64, l_abs: f64 },

    #[error("interval [{from}, {to}] crosses the resonant curve at t2 = {t2_star}")]
    CrossesResonance { from: f64, to: f64, t2_star: f64 },

    #[error("characteristic parameter sigma = {sigma} beyond contraction bound {bound}")]
    SigmaOutOfRange { sigma: f64, bound: f64 },

    #[error("layer coordinate |kappa| = {kappa} too small for the asymptotic boundary (need >= {min})")]
    KappaTooSmall { kappa: f64, min: f64 },

    #[error("non-finite values in {context} at t = {time}")]
    NonFinite { context: &'static str, time: f64 },

    #[error("step size collapsed to {h:e} at t = {t}")]
    StepSizeCollapse { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    /// `at_k` and `at_2k` hold `[c1_re, c1_im, c2_re, c2_im]` for the two truncations.
    #[error("connection coefficients not converged: drift {drift:.3e} between K = {k} and K = {k2}")]
    Convergence {
        drift: f64,
        k: f64,
        k2: f64,
        at_k: [f64; 4],
        at_2k: [f64; 4],
    },

    #[error("solver aborted at t = {time} (last good snapshot {last_snapshot:?}): {reason}")]
    SolverAbort {
        time: f64,
        last_snapshot: Option<usize>,
        reason: String,
    },

    #[error("malformed {what} in {path}: {reason}")]
    Parse {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
