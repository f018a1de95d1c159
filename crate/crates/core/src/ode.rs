//! Embedded Dormand-Prince 5(4) integrator on fixed-size real state vectors.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Dopri5 {
            rtol: tol,
            atol: tol,
            h_min: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` to `t1` (forward or backward).
    ///
    /// `observe` is called at the initial point and after every accepted step.
    pub fn integrate<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        mut observe: O,
    ) -> Result<([f64; N], OdeStats)>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N]),
    {
        let mut stats = OdeStats { accepted: 0, rejected: 0 };
        let mut t = t0;
        let mut y = y0;
        observe(t, &y);
        if t0 == t1 {
            return Ok((y, stats));
        }
        let dir = (t1 - t0).signum();
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, &y);
        let mut h = dir * self.initial_step(&y, &k[0], (t1 - t0).abs());

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps { t, max_steps: self.max_steps });
            }
            let last = (t + h - t1) * dir >= 0.0;
            if last {
                h = t1 - t;
            }

            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    *yi += h * acc;
                }
                k[s] = f(t + C[s] * h, &ys);
            }
            let mut y_new = y;
            for (i, yi) in y_new.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(6) {
                    acc += A[6][j] * kj[i];
                }
                *yi += h * acc;
            }
            // k[6] is already f(t + h, y_new) because row 6 of A equals the fifth-order weights.
            let mut err2 = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err2 += (h * e / sc).powi(2);
            }
            let err = (err2 / N as f64).sqrt();
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { context: "ode state", time: t });
            }

            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y = y_new;
                k[0] = k[6];
                stats.accepted += 1;
                observe(t, &y);
                if last {
                    return Ok((y, stats));
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            if h.abs() < self.h_min {
                return Err(Error::StepSizeCollapse { t, h: h.abs() });
            }
        }
    }

    fn initial_step<const N: usize>(&self, y: &[f64; N], dy: &[f64; N], span: f64) -> f64 {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y[i].abs();
            d0 += (y[i] / sc).powi(2);
            d1 += (dy[i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span)
    }
}
