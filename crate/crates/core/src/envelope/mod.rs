//! The complex envelope `Psi(zeta, t2)`: NLSE evolution, WKB reconstruction of
//! the field and the jump map across a resonant curve.

mod connection;
mod nlse;

pub use connection::{
    apply_connection, connection_coeffs_analytic, layer_pair, unit_determinant_pair, C2Phase,
    ConnectionCoefficients,
};
pub use nlse::{nlse_step, NlseStepper};

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::g_between;
use crate::interp::periodic_cubic;
use crate::io::CsvTable;
use crate::params::ModelParams;
use crate::phase::DriverPhase;

/// `Psi` sampled on a periodic uniform grid `zeta_i = zeta_min + i * period / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    zeta_min: f64,
    period: f64,
    pub values: Vec<Complex64>,
    pub t2: f64,
    mass0: f64,
}

impl ComplexEnvelope {
    pub fn new(zeta_min: f64, period: f64, values: Vec<Complex64>, t2: f64) -> Result<Self> {
        let n = values.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::invalid("nlse.n", format!("grid size {n} must be a power of two >= 16")));
        }
        if !(period > 0.0) || !period.is_finite() || !zeta_min.is_finite() {
            return Err(Error::invalid("nlse.zeta_extent", "period must be positive and finite"));
        }
        let mut env = ComplexEnvelope { zeta_min, period, values, t2, mass0: 0.0 };
        env.mass0 = env.mass();
        if !env.mass0.is_finite() {
            return Err(Error::NonFinite { context: "initial envelope", time: t2 });
        }
        Ok(env)
    }

    /// Samples `f(zeta)` on `n` points covering `[zeta_min, zeta_min + period)`.
    pub fn from_fn(zeta_min: f64, period: f64, n: usize, t2: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let dz = period / n as f64;
        let values = (0..n).map(|i| f(zeta_min + i as f64 * dz)).collect();
        Self::new(zeta_min, period, values, t2)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zeta_min(&self) -> f64 {
        self.zeta_min
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dzeta(&self) -> f64 {
        self.period / self.values.len() as f64
    }

    pub fn zeta(&self, i: usize) -> f64 {
        self.zeta_min + i as f64 * self.dzeta()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dzeta()
    }

    /// Mass recorded when the envelope was built.
    pub fn initial_mass(&self) -> f64 {
        self.mass0
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Cubic interpolation at arbitrary `zeta` (periodic).
    pub fn at(&self, zeta: f64) -> Complex64 {
        periodic_cubic(&self.values, self.zeta_min, self.dzeta(), zeta)
    }

    /// Same grid and time, new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        let mut out = ComplexEnvelope { values, ..self.clone() };
        out.mass0 = out.mass();
        out
    }

    pub fn to_table(&self, params: Option<&ModelParams>) -> CsvTable {
        let mut t = CsvTable::new(&["zeta", "re_psi", "im_psi"])
            .with_meta("t2", self.t2)
            .with_meta("zeta_min", self.zeta_min)
            .with_meta("period", self.period)
            .with_meta("n", self.values.len());
        if let Some(p) = params {
            t = t
                .with_meta("epsilon", p.epsilon)
                .with_meta("f", p.f)
                .with_meta("gamma", p.gamma)
                .with_meta("k", p.k)
                .with_meta("omega", p.omega);
        }
        t.rows = (0..self.len()).map(|i| vec![self.zeta(i), self.values[i].re, self.values[i].im]).collect();
        t
    }

    pub fn write_csv(&self, path: &Path, params: Option<&ModelParams>) -> Result<()> {
        self.to_table(params).write(path)
    }

    pub fn from_table(t: &CsvTable, path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Parse { what: "envelope snapshot", path: path.to_path_buf(), reason: reason.into() };
        let get = |k: &str| t.meta_f64(k).ok_or_else(|| bad(&format!("missing header `{k}`")));
        let (t2, zeta_min, period) = (get("t2")?, get("zeta_min")?, get("period")?);
        let re = t.column("re_psi").ok_or_else(|| bad("missing column re_psi"))?;
        let im = t.column("im_psi").ok_or_else(|| bad("missing column im_psi"))?;
        let values = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        Self::new(zeta_min, period, values, t2)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_table(&CsvTable::read(path)?, path)
    }
}

/// Closed-form NLSE soliton for `gamma = -1/3`, `omega = 1`, `k = 0`:
/// `sqrt(2) eta exp(i (kappa x1 + (kappa^2 - eta^2) t2 / 2)) / cosh(eta (x1 + kappa t2))`.
pub fn soliton(eta: f64, kappa: f64, x1: f64, t2: f64) -> Complex64 {
    let phase = kappa * x1 + 0.5 * (kappa * kappa - eta * eta) * t2;
    Complex64::from_polar(2f64.sqrt() * eta / (eta * (x1 + kappa * t2)).cosh(), phase)
}

/// Which side of a resonant curve a WKB expression describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Pre,
    Post,
}

/// Leading-order field `2 eps Re[Psi(zeta) exp(-+ i f^2/(4 omega) G(t2)) exp(i(k x + omega t))]`
/// with `G(t2_ref) = 0`, minus sign before the crossing and plus after.
pub fn wkb_field(
    env: &ComplexEnvelope,
    params: &ModelParams,
    s: &dyn DriverPhase,
    side: Side,
    t2_ref: f64,
    x: f64,
    t: f64,
) -> Result<f64> {
    let eps = params.epsilon;
    let (x2, t2) = (eps * eps * x, eps * eps * t);
    let g = g_between(t2_ref, t2, x2, s, params)?;
    let sign = match side {
        Side::Pre => -1.0,
        Side::Post => 1.0,
    };
    let zeta = eps * (params.omega * x + params.k * t);
    let carrier = params.k * x + params.omega * t;
    let theta = sign * params.f * params.f / (4.0 * params.omega) * g + carrier;
    Ok(2.0 * eps * (env.at(zeta) * Complex64::from_polar(1.0, theta)).re)
}
