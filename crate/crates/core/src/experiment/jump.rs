use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{ComplexEnvelope, ConnectionCoefficients, NlseStepper};
use crate::error::{Error, Result};
use crate::geometry::{g_between, g_finite_part, ResonanceEvent};
use crate::interp::periodic_cubic;
use crate::io::CsvTable;
use crate::layer::connection_matrix_numeric;
use crate::params::ModelParams;
use crate::phase::DriverPhase;

/// Rate of the driver-induced envelope phase: `A = eps Psi exp(i c G)` with `c = f^2 / (8 omega)`.
pub fn g_phase_coefficient(params: &ModelParams) -> f64 {
    params.f * params.f / (8.0 * params.omega)
}

/// Window-averaged demodulated envelope `A(x)` of the Klein-Gordon run around fast time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeProfile {
    pub t: f64,
    pub half_width: f64,
    pub x_min: f64,
    pub dx: f64,
    pub values: Vec<Complex64>,
}

impl EnvelopeProfile {
    pub fn at_x(&self, x: f64) -> Complex64 {
        periodic_cubic(&self.values, self.x_min, self.dx, x)
    }

    /// `Psi = A / eps` on an `n`-point periodic grid in `zeta = eps (omega x + k t)`.
    pub fn to_envelope(&self, params: &ModelParams, n: usize) -> Result<ComplexEnvelope> {
        let eps = params.epsilon;
        let zeta_min = eps * (params.omega * self.x_min + params.k * self.t);
        let period = eps * params.omega * self.dx * self.values.len() as f64;
        ComplexEnvelope::from_fn(zeta_min, period, n, eps * eps * self.t, |zeta| {
            let x = (zeta / eps - params.k * self.t) / params.omega;
            self.at_x(x) / eps
        })
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["x", "re_a", "im_a"])
            .with_meta("t", self.t)
            .with_meta("half_width", self.half_width)
            .with_meta("x_min", self.x_min)
            .with_meta("dx", self.dx);
        t.rows = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![self.x_min + i as f64 * self.dx, v.re, v.im])
            .collect();
        t
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.to_table().write(path)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let t = CsvTable::read(path)?;
        let bad = |r: &str| Error::Parse { what: "envelope profile", path: path.to_path_buf(), reason: r.into() };
        let get = |k: &str| t.meta_f64(k).ok_or_else(|| bad(&format!("missing header `{k}`")));
        let re = t.column("re_a").ok_or_else(|| bad("missing column re_a"))?;
        let im = t.column("im_a").ok_or_else(|| bad("missing column im_a"))?;
        Ok(EnvelopeProfile {
            t: get("t")?,
            half_width: get("half_width")?,
            x_min: get("x_min")?,
            dx: get("dx")?,
            values: re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect(),
        })
    }
}

/// Local data of a crossing seen at a fixed probe position.
///
/// The resonant mode's phase mismatch along `t` is
/// `P(t) = -(m S(eps^2 x, eps^2 t) / eps^2 + 2 (k x + omega t))`, stationary at `t*`.
/// The layer coordinate is `kappa = (t - t*) / s` with `s = sqrt(2 / |P''|)` and
/// the layer coupling is `F = eps f s / (4 omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerScaling {
    pub t_star: f64,
    pub p_star: f64,
    /// Sign of `P''(t*)`.
    pub sigma: f64,
    pub s: f64,
    pub big_f: f64,
}

pub fn layer_scaling(event: &ResonanceEvent, params: &ModelParams, s: &dyn DriverPhase, x_probe: f64) -> LayerScaling {
    let eps = params.epsilon;
    let e2 = eps * eps;
    let m = event.label.m as f64 * event.label.j.signum() as f64;
    let t_star = event.t2_star / e2;
    let x2 = e2 * x_probe;
    let p_star = -(m * s.value(x2, event.t2_star) / e2 + 2.0 * (params.k * x_probe + params.omega * t_star));
    let p2 = -m * e2 * s.dzz(x2, event.t2_star);
    let scale = (2.0 / p2.abs()).sqrt();
    LayerScaling {
        t_star,
        p_star,
        sigma: p2.signum(),
        s: scale,
        big_f: eps * params.f * scale / (4.0 * params.omega),
    }
}

/// Phase offset between the outer envelope on one side and the layer amplitude.
///
/// `t2_ref` is where the outer `G` is referenced (`G(t2_ref) = 0`).
pub fn jump_beta(
    event: &ResonanceEvent,
    scaling: &LayerScaling,
    t2_ref: f64,
    params: &ModelParams,
    s: &dyn DriverPhase,
) -> Result<f64> {
    let eps = params.epsilon;
    let fin = if params.f == 0.0 { 0.0 } else { g_phase_coefficient(params) * g_finite_part(event, t2_ref, s, params)? };
    let f2 = scaling.big_f * scaling.big_f;
    Ok(fin + scaling.sigma * 0.5 * f2 * (eps * eps * scaling.s).ln() - 0.5 * scaling.p_star)
}

/// Outer envelope value to layer amplitude.
pub fn to_layer(psi: Complex64, beta: f64, sigma: f64) -> Complex64 {
    let z = psi * Complex64::from_polar(1.0, beta);
    if sigma < 0.0 {
        z
    } else {
        Complex64::new(0.0, -1.0) * z.conj()
    }
}

/// Inverse of [`to_layer`].
pub fn from_layer(c: Complex64, beta: f64, sigma: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, -beta);
    if sigma < 0.0 {
        c * rot
    } else {
        Complex64::new(0.0, -1.0) * c.conj() * rot
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpConfig {
    /// Distance in `t2` from the crossing at which the envelope is measured.
    pub delta: f64,
    pub nlse_n: usize,
    pub nlse_dt2: f64,
    pub layer_k: f64,
    pub layer_tol: f64,
}

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig { delta: 0.5, nlse_n: 1024, nlse_dt2: 1e-3, layer_k: 200.0, layer_tol: 1e-10 }
    }
}

/// Numerically integrated connection pair for layer coupling `F` (identity for `F = 0`).
pub fn numeric_pair(big_f: f64, cfg: &JumpConfig) -> Result<ConnectionCoefficients> {
    if big_f == 0.0 {
        return Ok(ConnectionCoefficients::IDENTITY);
    }
    Ok(connection_matrix_numeric(big_f, cfg.layer_k, cfg.layer_tol)?.coeffs)
}

/// Propagates the pre-crossing envelope to the crossing, applies the jump and
/// propagates to the post-crossing measurement time `t_post` (fast time).
pub fn predict_post_envelope(
    event: &ResonanceEvent,
    pre: &EnvelopeProfile,
    t_post: f64,
    params: &ModelParams,
    s: &dyn DriverPhase,
    cfg: &JumpConfig,
    pair: &ConnectionCoefficients,
    x_probe: f64,
) -> Result<ComplexEnvelope> {
    let e2 = params.epsilon * params.epsilon;
    let scaling = layer_scaling(event, params, s, x_probe);
    let (t2_pre, t2_post) = (e2 * pre.t, e2 * t_post);
    if !(t2_pre < event.t2_star && event.t2_star < t2_post) {
        return Err(Error::invalid("jump.delta", "measurement times must bracket the crossing"));
    }
    let beta_pre = jump_beta(event, &scaling, t2_pre, params, s)?;
    let beta_post = jump_beta(event, &scaling, t2_post, params, s)?;
    let mut env = pre.to_envelope(params, cfg.nlse_n)?;
    let mut stepper = NlseStepper::for_envelope(&env, params);
    stepper.advance_to(&mut env, event.t2_star, cfg.nlse_dt2)?;
    let jumped: Vec<Complex64> = env
        .values
        .iter()
        .map(|&psi| from_layer(pair.apply(to_layer(psi, beta_pre, scaling.sigma)), beta_post, scaling.sigma))
        .collect();
    let mut env = env.with_values(jumped);
    stepper.advance_to(&mut env, t2_post, cfg.nlse_dt2)?;
    Ok(env)
}

/// Measured against predicted envelope modulus ratio at one crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub label: String,
    pub t2_star: f64,
    pub t_star: f64,
    pub t_pre: f64,
    pub t_post: f64,
    #[serde(rename = "F")]
    pub big_f: f64,
    pub sigma: f64,
    pub c1_re: f64,
    pub c1_im: f64,
    pub c2_re: f64,
    pub c2_im: f64,
    pub a_pre_re: f64,
    pub a_pre_im: f64,
    pub a_post_re: f64,
    pub a_post_im: f64,
    pub a_pred_re: f64,
    pub a_pred_im: f64,
    pub measured_ratio: f64,
    pub predicted_ratio: f64,
    pub rel_error: f64,
}

/// Compares the measured post-crossing envelope at the probe with the prediction.
pub fn match_crossing(
    event: &ResonanceEvent,
    pre: &EnvelopeProfile,
    post: &EnvelopeProfile,
    params: &ModelParams,
    s: &dyn DriverPhase,
    cfg: &JumpConfig,
    pair: &ConnectionCoefficients,
    x_probe: f64,
) -> Result<JumpRecord> {
    let eps = params.epsilon;
    let scaling = layer_scaling(event, params, s, x_probe);
    let env = predict_post_envelope(event, pre, post.t, params, s, cfg, pair, x_probe)?;
    let a_pre = pre.at_x(x_probe);
    let a_post = post.at_x(x_probe);
    let a_pred = eps * env.at(eps * (params.omega * x_probe + params.k * post.t));
    let measured = a_post.norm() / a_pre.norm();
    let predicted = a_pred.norm() / a_pre.norm();
    Ok(JumpRecord {
        label: event.label.to_string(),
        t2_star: event.t2_star,
        t_star: scaling.t_star,
        t_pre: pre.t,
        t_post: post.t,
        big_f: scaling.big_f,
        sigma: scaling.sigma,
        c1_re: pair.c1.re,
        c1_im: pair.c1.im,
        c2_re: pair.c2.re,
        c2_im: pair.c2.im,
        a_pre_re: a_pre.re,
        a_pre_im: a_pre.im,
        a_post_re: a_post.re,
        a_post_im: a_post.im,
        a_pred_re: a_pred.re,
        a_pred_im: a_pred.im,
        measured_ratio: measured,
        predicted_ratio: predicted,
        rel_error: (measured - predicted).abs() / predicted,
    })
}

/// Klein-Gordon envelope against the NLSE evolution of its own earlier profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRecord {
    pub t2_from: f64,
    pub t2_to: f64,
    /// `max |A_kg - A_nlse| / max |A_nlse|` over the grid.
    pub linf_rel: f64,
    /// Driver phase `f^2/(8 omega) (G(t2_to) - G(t2_from))` applied to the NLSE envelope.
    pub g_phase: f64,
}

pub fn reduction_check(
    from: &EnvelopeProfile,
    to: &EnvelopeProfile,
    params: &ModelParams,
    s: &dyn DriverPhase,
    cfg: &JumpConfig,
    x_probe: f64,
) -> Result<ReductionRecord> {
    let eps = params.epsilon;
    let e2 = eps * eps;
    let (t2_from, t2_to) = (e2 * from.t, e2 * to.t);
    let g_phase = if params.f == 0.0 {
        0.0
    } else {
        g_phase_coefficient(params) * g_between(t2_from, t2_to, e2 * x_probe, s, params)?
    };
    let mut env = from.to_envelope(params, cfg.nlse_n)?;
    NlseStepper::for_envelope(&env, params).advance_to(&mut env, t2_to, cfg.nlse_dt2)?;
    let rot = Complex64::from_polar(eps, g_phase);
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for (i, a) in to.values.iter().enumerate() {
        let x = to.x_min + i as f64 * to.dx;
        let pred = rot * env.at(eps * (params.omega * x + params.k * to.t));
        worst = worst.max((a - pred).norm());
        peak = peak.max(pred.norm());
    }
    Ok(ReductionRecord { t2_from, t2_to, linf_rel: worst / peak, g_phase })
}
