//! Slow-phase geometry: the characteristic operator `L`, resonant curves,
//! the `g`/`G` phase and the internal detuning `lambda`.

mod characteristics;
mod g_phase;
mod resonance;

pub use characteristics::{fit_lambda_slope, integrate_characteristics, CharacteristicPoint, CharacteristicOptions};
pub use g_phase::{big_g, g_between, g_factor, g_finite_part, G_ABS_TOL, SINGULARITY_GUARD};
pub use resonance::{distinct_times, find_resonances, find_resonances_omega2, ResonanceEvent, ResonanceSearch};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::phase::DriverPhase;

/// Label `(j, m)` of the mode `chi = j (k x2 + omega t2) + m S(x2, t2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub j: i32,
    pub m: i32,
}

impl PhaseLabel {
    pub fn new(j: i32, m: i32) -> Result<Self> {
        if j == 0 && m == 0 {
            return Err(Error::invalid("label", "(0, 0) is not an oscillating mode"));
        }
        Ok(PhaseLabel { j, m })
    }

    pub const CARRIER: PhaseLabel = PhaseLabel { j: 1, m: 0 };
    pub const PLUS: PhaseLabel = PhaseLabel { j: 1, m: 1 };
    pub const MINUS: PhaseLabel = PhaseLabel { j: 1, m: -1 };

    /// The second-order mode set `{(+-1, +-1)}`.
    pub const OMEGA2: [PhaseLabel; 4] = [
        PhaseLabel { j: 1, m: 1 },
        PhaseLabel { j: 1, m: -1 },
        PhaseLabel { j: -1, m: 1 },
        PhaseLabel { j: -1, m: -1 },
    ];

    pub fn conj(self) -> Self {
        PhaseLabel { j: -self.j, m: -self.m }
    }
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.j, self.m)
    }
}

/// `L[chi_{j,m}] = (j omega + m S_t)^2 - (j k + m S_x)^2 - 1`.
pub fn big_l(label: PhaseLabel, x2: f64, t2: f64, s: &dyn DriverPhase, params: &ModelParams) -> f64 {
    let (j, m) = (label.j as f64, label.m as f64);
    let wt = j * params.omega + m * s.dz(x2, t2);
    let kx = j * params.k + m * s.dy(x2, t2);
    wt * wt - kx * kx - 1.0
}

/// `d L[chi_{j,m}] / d t2` at fixed `x2`.
pub fn big_l_dt2(label: PhaseLabel, x2: f64, t2: f64, s: &dyn DriverPhase, params: &ModelParams) -> f64 {
    let (j, m) = (label.j as f64, label.m as f64);
    let wt = j * params.omega + m * s.dz(x2, t2);
    let kx = j * params.k + m * s.dy(x2, t2);
    2.0 * m * (wt * s.dzz(x2, t2) - kx * s.dyz(x2, t2))
}

/// Internal detuning `lambda = (1 - S_t^2 / 4 + S_x^2 / 4) / eps`.
pub fn lambda_internal(x2: f64, t2: f64, s: &dyn DriverPhase, params: &ModelParams) -> f64 {
    let st = s.dz(x2, t2);
    let sx = s.dy(x2, t2);
    (1.0 - 0.25 * st * st + 0.25 * sx * sx) / params.epsilon
}

/// `d lambda / d sigma` along the characteristics `dt1/dsigma = S_t`, `dx1/dsigma = -S_x`.
///
/// Exact chain rule; independent of `eps` because the `1/eps` in `lambda`
/// cancels the `eps` from the slow-variable scaling.
pub fn lambda_rate(x2: f64, t2: f64, s: &dyn DriverPhase) -> f64 {
    let st = s.dz(x2, t2);
    let sx = s.dy(x2, t2);
    let (stt, sxx, sxt) = (s.dzz(x2, t2), s.dyy(x2, t2), s.dyz(x2, t2));
    let dl_dt = -0.5 * st * stt + 0.5 * sx * sxt;
    let dl_dx = -0.5 * st * sxt + 0.5 * sx * sxx;
    dl_dt * st - dl_dx * sx
}
