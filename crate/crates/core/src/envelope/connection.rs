use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ComplexEnvelope;
use crate::error::{Error, Result};
use crate::gamma::gamma;

/// Jump map `Psi -> c1 Psi + c2 conj(Psi)` across a resonant curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionCoefficients {
    pub c1: Complex64,
    pub c2: Complex64,
    /// Driver strength the pair was built from (`f` for analytic pairs, `F` for layer pairs).
    pub f_used: f64,
}

impl ConnectionCoefficients {
    pub const IDENTITY: ConnectionCoefficients = ConnectionCoefficients {
        c1: Complex64::new(1.0, 0.0),
        c2: Complex64::new(0.0, 0.0),
        f_used: 0.0,
    };

    pub fn apply(&self, psi: Complex64) -> Complex64 {
        self.c1 * psi + self.c2 * psi.conj()
    }

    /// Inverse map, defined when `|c1| != |c2|`.
    pub fn inverse(&self) -> Result<ConnectionCoefficients> {
        let det = self.c1.norm_sqr() - self.c2.norm_sqr();
        if det.abs() < 1e-14 {
            return Err(Error::invalid("coeffs", "jump map is singular"));
        }
        Ok(ConnectionCoefficients {
            c1: self.c1.conj() / det,
            c2: -self.c2 / det,
            f_used: self.f_used,
        })
    }
}

/// The two competing analytic phases of `c2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum C2Phase {
    /// `+(F^2/4) ln 2`, from matching the right asymptotics.
    Matching,
    /// `-(F^2/2) ln 2`, as stated in the main theorem.
    Theorem,
}

impl C2Phase {
    /// The candidate selected by integrating the layer equation.
    pub const RESOLVED: C2Phase = C2Phase::Theorem;

    pub fn theta(self, big_f: f64) -> f64 {
        match self {
            C2Phase::Matching => 0.25 * big_f * big_f * LN_2,
            C2Phase::Theorem => -0.5 * big_f * big_f * LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            C2Phase::Matching => "matching",
            C2Phase::Theorem => "theorem",
        }
    }
}

fn c2_core(big_f: f64, phase: C2Phase) -> Complex64 {
    let b = 0.5 * big_f * big_f;
    Complex64::from_polar((0.5 * PI * b).exp() * big_f * PI.sqrt(), phase.theta(big_f))
        / gamma(Complex64::new(1.0, -b))
}

/// Layer-normalised pair with the `(1 + i)` prefactor:
/// `c1 = exp(pi F^2 / 2)`, `c2 = (1 + i) exp(pi F^2 / 4) exp(i theta) F sqrt(pi) / Gamma(1 - i F^2 / 2)`.
/// Satisfies `|c2|^2 = 2 (|c1|^2 - 1)`.
pub fn layer_pair(big_f: f64, phase: C2Phase) -> ConnectionCoefficients {
    ConnectionCoefficients {
        c1: Complex64::new((0.5 * PI * big_f * big_f).exp(), 0.0),
        c2: Complex64::new(1.0, 1.0) * c2_core(big_f, phase),
        f_used: big_f,
    }
}

/// As [`layer_pair`] with the unimodular prefactor `exp(i pi / 4)` in place of `1 + i`,
/// which gives `|c1|^2 - |c2|^2 = 1`.
pub fn unit_determinant_pair(big_f: f64, phase: C2Phase) -> ConnectionCoefficients {
    ConnectionCoefficients {
        c2: Complex64::from_polar(1.0, 0.25 * PI) * c2_core(big_f, phase),
        ..layer_pair(big_f, phase)
    }
}

/// The pair written in the driver strength `f`, i.e. `F = f / 2`:
/// `|c1| = exp(f^2 pi / 8)`.
pub fn connection_coeffs_analytic(f: f64, phase: C2Phase) -> Result<ConnectionCoefficients> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::invalid("f", "must be positive"));
    }
    Ok(ConnectionCoefficients { f_used: f, ..layer_pair(0.5 * f, phase) })
}

/// Pointwise `c1 Psi + c2 conj(Psi)` on the same grid and time.
pub fn apply_connection(env: &ComplexEnvelope, coeffs: &ConnectionCoefficients) -> ComplexEnvelope {
    env.with_values(env.values.iter().map(|&v| coeffs.apply(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn analytic_examples() {
        let c = connection_coeffs_analytic(1.0, C2Phase::RESOLVED).unwrap();
        assert!((c.c1.norm() - 1.480_972_67).abs() < 1e-8);
        assert!((c.c1.norm() - (PI / 8.0).exp()).abs() < 1e-15);
        let small = connection_coeffs_analytic(1e-6, C2Phase::RESOLVED).unwrap();
        assert!((small.c1 - 1.0).norm() < 1e-12 && small.c2.norm() < 1e-5);
        assert!(connection_coeffs_analytic(0.0, C2Phase::RESOLVED).is_err());
    }

    proptest! {
        #[test]
        fn reflection_identities(f in 0.01f64..3.0) {
            for phase in [C2Phase::Matching, C2Phase::Theorem] {
                let c = connection_coeffs_analytic(f, phase).unwrap();
                let lhs = c.c2.norm_sqr();
                let rhs = 2.0 * (c.c1.norm_sqr() - 1.0);
                prop_assert!((lhs - rhs).abs() < 1e-10 * lhs);
                let u = unit_determinant_pair(0.5 * f, phase);
                prop_assert!((u.c1.norm_sqr() - u.c2.norm_sqr() - 1.0).abs() < 1e-10 * u.c1.norm_sqr());
            }
        }

        #[test]
        fn candidates_differ_by_a_phase_only(big_f in 0.01f64..1.5) {
            let a = layer_pair(big_f, C2Phase::Matching);
            let b = layer_pair(big_f, C2Phase::Theorem);
            prop_assert!((a.c2.norm() - b.c2.norm()).abs() < 1e-14 * a.c2.norm().max(1e-300));
            let d = (a.c2 / b.c2).arg();
            prop_assert!((d - 0.75 * big_f * big_f * LN_2).abs() < 1e-12);
        }

        #[test]
        fn apply_respects_conjugation(phi in -3.0f64..3.0, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let c = connection_coeffs_analytic(1.0, C2Phase::RESOLVED).unwrap();
            let psi = Complex64::new(re, im);
            let rot = Complex64::from_polar(1.0, phi);
            let lhs = c.apply(rot * psi);
            let rhs = c.c1 * (rot * psi) + c.c2 * (rot.conj() * psi.conj());
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn apply_connection_examples() {
        let env = ComplexEnvelope::from_fn(0.0, 1.0, 16, 0.0, |z| Complex64::new(z.cos(), z.sin() - 0.3)).unwrap();
        assert_eq!(apply_connection(&env, &ConnectionCoefficients::IDENTITY).values, env.values);

        let c = connection_coeffs_analytic(1.0, C2Phase::RESOLVED).unwrap();
        let ones = ComplexEnvelope::from_fn(0.0, 1.0, 16, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        let out = apply_connection(&ones, &c);
        assert!(out.values.iter().all(|v| *v == c.c1 + c.c2));

        let m = env.mass();
        let after = apply_connection(&env, &c).mass();
        let (lo, hi) = ((c.c1.norm() - c.c2.norm()).powi(2) * m, (c.c1.norm() + c.c2.norm()).powi(2) * m);
        assert!(lo <= after && after <= hi);
    }

    #[test]
    fn inverse_round_trip() {
        let c = unit_determinant_pair(0.7, C2Phase::RESOLVED);
        let inv = c.inverse().unwrap();
        let psi = Complex64::new(0.3, -1.1);
        assert!((inv.apply(c.apply(psi)) - psi).norm() < 1e-14);
    }
}
