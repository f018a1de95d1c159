//! Slow driver phases `S(y, z)` with `y = x2`, `z = t2`.

use crate::params::ModelParams;

/// A slow phase together with its first and second partial derivatives.
///
/// Partials are supplied by the implementor; no symbolic differentiation is
/// attempted. `Sync` so that field updates can evaluate the driver in parallel.
pub trait DriverPhase: Sync {
    fn value(&self, y: f64, z: f64) -> f64;
    fn dy(&self, y: f64, z: f64) -> f64;
    fn dz(&self, y: f64, z: f64) -> f64;
    fn dyy(&self, y: f64, z: f64) -> f64;
    fn dzz(&self, y: f64, z: f64) -> f64;
    fn dyz(&self, y: f64, z: f64) -> f64;

    /// Closed-form antiderivative in `t2` of the `g` factor, when one is known.
    fn g_antiderivative(&self, _x2: f64, _t2: f64, _params: &ModelParams) -> Option<f64> {
        None
    }
}

/// `S(y, z) = a z^2 / 2`; `a = 1` is the model phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPhase {
    pub a: f64,
}

impl QuadraticPhase {
    pub fn model() -> Self {
        QuadraticPhase { a: 1.0 }
    }
}

impl Default for QuadraticPhase {
    fn default() -> Self {
        Self::model()
    }
}

impl DriverPhase for QuadraticPhase {
    fn value(&self, _y: f64, z: f64) -> f64 {
        0.5 * self.a * z * z
    }
    fn dy(&self, _y: f64, _z: f64) -> f64 {
        0.0
    }
    fn dz(&self, _y: f64, z: f64) -> f64 {
        self.a * z
    }
    fn dyy(&self, _y: f64, _z: f64) -> f64 {
        0.0
    }
    fn dzz(&self, _y: f64, _z: f64) -> f64 {
        self.a
    }
    fn dyz(&self, _y: f64, _z: f64) -> f64 {
        0.0
    }

    // g = 2 / (a^2 t2^2 - 4 omega^2) for every k on the dispersion branch.
    fn g_antiderivative(&self, _x2: f64, t2: f64, params: &ModelParams) -> Option<f64> {
        let w2 = 2.0 * params.omega;
        let at = self.a * t2;
        Some(((at - w2) / (at + w2)).abs().ln() / (self.a * w2))
    }
}

/// Separable polynomial phase `S(y, z) = sum_i t_i z^i + sum_j x_j y^j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialPhase {
    pub t_coeffs: Vec<f64>,
    pub x_coeffs: Vec<f64>,
}

/// Horner evaluation of the `deriv`-th derivative of `sum_i c[i] v^i`.
fn poly(c: &[f64], v: f64, deriv: usize) -> f64 {
    c.iter()
        .enumerate()
        .skip(deriv)
        .rev()
        .fold(0.0, |acc, (i, &ci)| {
            let falling: f64 = (0..deriv).map(|d| (i - d) as f64).product();
            acc * v + ci * falling
        })
}

impl DriverPhase for PolynomialPhase {
    fn value(&self, y: f64, z: f64) -> f64 {
        poly(&self.t_coeffs, z, 0) + poly(&self.x_coeffs, y, 0)
    }
    fn dy(&self, y: f64, _z: f64) -> f64 {
        poly(&self.x_coeffs, y, 1)
    }
    fn dz(&self, _y: f64, z: f64) -> f64 {
        poly(&self.t_coeffs, z, 1)
    }
    fn dyy(&self, y: f64, _z: f64) -> f64 {
        poly(&self.x_coeffs, y, 2)
    }
    fn dzz(&self, _y: f64, z: f64) -> f64 {
        poly(&self.t_coeffs, z, 2)
    }
    fn dyz(&self, _y: f64, _z: f64) -> f64 {
        0.0
    }
}

/// Runtime selection between the built-in phases.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseChoice {
    Quadratic(QuadraticPhase),
    Polynomial(PolynomialPhase),
}

impl PhaseChoice {
    fn inner(&self) -> &dyn DriverPhase {
        match self {
            PhaseChoice::Quadratic(p) => p,
            PhaseChoice::Polynomial(p) => p,
        }
    }
}

impl Default for PhaseChoice {
    fn default() -> Self {
        PhaseChoice::Quadratic(QuadraticPhase::model())
    }
}

impl DriverPhase for PhaseChoice {
    fn value(&self, y: f64, z: f64) -> f64 {
        self.inner().value(y, z)
    }
    fn dy(&self, y: f64, z: f64) -> f64 {
        self.inner().dy(y, z)
    }
    fn dz(&self, y: f64, z: f64) -> f64 {
        self.inner().dz(y, z)
    }
    fn dyy(&self, y: f64, z: f64) -> f64 {
        self.inner().dyy(y, z)
    }
    fn dzz(&self, y: f64, z: f64) -> f64 {
        self.inner().dzz(y, z)
    }
    fn dyz(&self, y: f64, z: f64) -> f64 {
        self.inner().dyz(y, z)
    }
    fn g_antiderivative(&self, x2: f64, t2: f64, params: &ModelParams) -> Option<f64> {
        self.inner().g_antiderivative(x2, t2, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central(f: impl Fn(f64) -> f64, v: f64, h: f64) -> f64 {
        (f(v + h) - f(v - h)) / (2.0 * h)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    fn check_partials(s: &dyn DriverPhase, y: f64, z: f64) {
        let h = 1e-5;
        assert!(rel_close(s.dy(y, z), central(|v| s.value(v, z), y, h), 1e-6));
        assert!(rel_close(s.dz(y, z), central(|v| s.value(y, v), z, h), 1e-6));
        assert!(rel_close(s.dyy(y, z), central(|v| s.dy(v, z), y, h), 1e-6));
        assert!(rel_close(s.dzz(y, z), central(|v| s.dz(y, v), z, h), 1e-6));
        assert!(rel_close(s.dyz(y, z), central(|v| s.dy(y, v), z, h), 1e-6));
    }

    proptest! {
        #[test]
        fn quadratic_partials_match_finite_differences(y in -5.0f64..5.0, z in -9.0f64..9.0) {
            check_partials(&QuadraticPhase::model(), y, z);
        }

        #[test]
        fn polynomial_partials_match_finite_differences(y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let s = PolynomialPhase { t_coeffs: vec![0.3, -1.0, 0.5, 0.1], x_coeffs: vec![0.0, 0.2, -0.4] };
            check_partials(&s, y, z);
        }
    }

    #[test]
    fn polynomial_reduces_to_quadratic() {
        let p = PolynomialPhase { t_coeffs: vec![0.0, 0.0, 0.5], x_coeffs: vec![] };
        let q = QuadraticPhase::model();
        for z in [-3.0, -0.5, 0.0, 2.0] {
            assert_eq!(p.value(1.0, z), q.value(1.0, z));
            assert_eq!(p.dz(0.0, z), q.dz(0.0, z));
            assert_eq!(p.dzz(0.0, z), q.dzz(0.0, z));
        }
    }

    #[test]
    fn quadratic_closed_form_g() {
        let params = ModelParams::soliton_model(0.1, 0.5).unwrap();
        let q = QuadraticPhase::model();
        let t2: f64 = -3.0;
        let g = q.g_antiderivative(0.0, t2, &params).unwrap();
        assert!((g - 0.5 * ((t2 - 2.0) / (t2 + 2.0)).ln()).abs() < 1e-15);
    }
}
