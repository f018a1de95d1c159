use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::ComplexEnvelope;
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Strang-split Fourier stepper for `2 i omega Psi_t - Psi_zz + 3 gamma |Psi|^2 Psi = 0`.
///
/// Half nonlinear rotation, exact linear propagation in Fourier space, half
/// nonlinear rotation. Both substeps are unitary, so mass is conserved to
/// round-off, and the scheme is symmetric (negative `dt` runs it backwards).
pub struct NlseStepper {
    n: usize,
    period: f64,
    omega: f64,
    gamma: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    cached: Option<(f64, Vec<Complex64>)>,
}

impl NlseStepper {
    pub fn new(n: usize, period: f64, params: &ModelParams) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        NlseStepper {
            n,
            period,
            omega: params.omega,
            gamma: params.gamma,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
            cached: None,
        }
    }

    pub fn for_envelope(env: &ComplexEnvelope, params: &ModelParams) -> Self {
        Self::new(env.len(), env.period(), params)
    }

    /// `|Psi|^2` phase rate of the nonlinear substep: `Psi_t = i (3 gamma / (2 omega)) |Psi|^2 Psi`.
    pub fn nonlinear_rate(&self) -> f64 {
        3.0 * self.gamma / (2.0 * self.omega)
    }

    fn propagator(&mut self, dt: f64) -> &[Complex64] {
        let stale = !matches!(&self.cached, Some((d, _)) if *d == dt);
        if stale {
            let n = self.n;
            let dq = 2.0 * PI / self.period;
            let scale = dt / (2.0 * self.omega);
            let p = (0..n)
                .map(|j| {
                    let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                    let q = m * dq;
                    Complex64::from_polar(1.0 / n as f64, q * q * scale)
                })
                .collect();
            self.cached = Some((dt, p));
        }
        &self.cached.as_ref().expect("propagator just cached").1
    }

    fn rotate(values: &mut [Complex64], rate: f64) {
        for v in values.iter_mut() {
            *v *= Complex64::from_polar(1.0, rate * v.norm_sqr());
        }
    }

    /// One step of size `dt` (either sign).
    pub fn step(&mut self, env: &mut ComplexEnvelope, dt: f64) -> Result<()> {
        if env.len() != self.n {
            return Err(Error::invalid("envelope", "grid size differs from the stepper's plan"));
        }
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::invalid("nlse.dt2", "step must be finite and nonzero"));
        }
        let half = 0.5 * dt * self.nonlinear_rate();
        Self::rotate(&mut env.values, half);
        let mut scratch = std::mem::take(&mut self.scratch);
        self.forward.process_with_scratch(&mut env.values, &mut scratch);
        let prop = self.propagator(dt);
        for (v, p) in env.values.iter_mut().zip(prop) {
            *v *= p;
        }
        self.inverse.process_with_scratch(&mut env.values, &mut scratch);
        self.scratch = scratch;
        Self::rotate(&mut env.values, half);
        env.t2 += dt;
        if env.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { context: "NLSE envelope", time: env.t2 });
        }
        Ok(())
    }

    /// Advances to exactly `t2_end` with equal steps no longer than `dt_max`.
    pub fn advance_to(&mut self, env: &mut ComplexEnvelope, t2_end: f64, dt_max: f64) -> Result<usize> {
        let span = t2_end - env.t2;
        if span == 0.0 {
            return Ok(0);
        }
        if !(dt_max > 0.0) {
            return Err(Error::invalid("nlse.dt2", "must be positive"));
        }
        let steps = (span.abs() / dt_max).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let t0 = env.t2;
        for i in 0..steps {
            self.step(env, dt)?;
            env.t2 = t0 + dt * (i + 1) as f64;
        }
        env.t2 = t2_end;
        Ok(steps)
    }
}

/// One Strang step of the envelope; builds a fresh FFT plan.
pub fn nlse_step(env: &ComplexEnvelope, dt2: f64, params: &ModelParams) -> Result<ComplexEnvelope> {
    let mut out = env.clone();
    NlseStepper::for_envelope(env, params).step(&mut out, dt2)?;
    Ok(out)
}
