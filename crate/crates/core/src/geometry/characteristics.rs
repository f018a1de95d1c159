use serde::{Deserialize, Serialize};

use super::lambda_internal;
use crate::error::{Error, Result};
use crate::ode::Dopri5;
use crate::params::ModelParams;
use crate::phase::DriverPhase;

#[derive(Debug, Clone, Copy)]
pub struct CharacteristicOptions {
    /// Paths are confined to `|sigma| < c1 / eps`.
    pub c1: f64,
    pub tol: f64,
}

impl Default for CharacteristicOptions {
    fn default() -> Self {
        CharacteristicOptions { c1: 1.0, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPoint {
    pub sigma: f64,
    pub x1: f64,
    pub t1: f64,
    pub lambda: f64,
}

/// Integrates `dt1/dsigma = S_t(eps x1, eps t1)`, `dx1/dsigma = -S_x(eps x1, eps t1)`
/// from `(x1_0, t1_0)` at `sigma = 0`, returning `samples` equally spaced points
/// over `sigma_range` (endpoints included).
pub fn integrate_characteristics(
    x1_0: f64,
    t1_0: f64,
    sigma_range: (f64, f64),
    samples: usize,
    s: &dyn DriverPhase,
    params: &ModelParams,
    opts: &CharacteristicOptions,
) -> Result<Vec<CharacteristicPoint>> {
    let eps = params.epsilon;
    let bound = opts.c1 / eps;
    let (lo, hi) = sigma_range;
    if !(lo <= hi) {
        return Err(Error::invalid("sigma_range", "expected lo <= hi"));
    }
    for sigma in [lo, hi] {
        if !(sigma.abs() < bound) {
            return Err(Error::SigmaOutOfRange { sigma, bound });
        }
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least two samples"));
    }
    let rhs = |_: f64, y: &[f64; 2]| {
        let (x2, t2) = (eps * y[0], eps * y[1]);
        [-s.dy(x2, t2), s.dz(x2, t2)]
    };
    let solver = Dopri5::new(opts.tol);
    let point = |sigma: f64, y: [f64; 2]| CharacteristicPoint {
        sigma,
        x1: y[0],
        t1: y[1],
        lambda: lambda_internal(eps * y[0], eps * y[1], s, params),
    };
    let grid: Vec<f64> = (0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect();
    let mut out: Vec<Option<CharacteristicPoint>> = vec![None; samples];
    let split = grid.partition_point(|&sg| sg < 0.0);
    // Forward from sigma = 0 over the non-negative samples, backward over the rest.
    let mut y = [x1_0, t1_0];
    let mut at = 0.0;
    for i in split..samples {
        y = solver.integrate(rhs, at, y, grid[i], |_, _| {})?.0;
        at = grid[i];
        out[i] = Some(point(at, y));
    }
    let mut y = [x1_0, t1_0];
    let mut at = 0.0;
    for i in (0..split).rev() {
        y = solver.integrate(rhs, at, y, grid[i], |_, _| {})?.0;
        at = grid[i];
        out[i] = Some(point(at, y));
    }
    Ok(out.into_iter().flatten().collect())
}

/// Slope at `sigma = 0` of a least-squares quadratic fit of `lambda(sigma)`
/// over the samples with `|sigma| <= half_width`.
pub fn fit_lambda_slope(path: &[CharacteristicPoint], half_width: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = path
        .iter()
        .filter(|p| p.sigma.abs() <= half_width)
        .map(|p| (p.sigma, p.lambda))
        .collect();
    if pts.len() < 3 {
        return Err(Error::invalid("path", "need at least three samples inside the fit window"));
    }
    // Normal equations for lambda = a + b sigma + c sigma^2.
    let mut m = [[0.0f64; 4]; 3];
    for &(x, y) in &pts {
        let basis = [1.0, x, x * x];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
            m[r][3] += basis[r] * y;
        }
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        m.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return Err(Error::invalid("path", "degenerate fit window"));
        }
        for r in 0..3 {
            if r != col {
                let factor = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= factor * m[col][c];
                }
            }
        }
    }
    Ok(m[1][3] / m[1][1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{find_resonances_omega2, ResonanceSearch};
    use crate::phase::{PolynomialPhase, QuadraticPhase};

    #[test]
    fn model_path_closed_form() {
        let p = ModelParams::soliton_model(0.1, 0.5).unwrap();
        let s = QuadraticPhase::model();
        let path = integrate_characteristics(3.0, -20.0, (-5.0, 5.0), 41, &s, &p, &Default::default()).unwrap();
        assert_eq!(path.len(), 41);
        for pt in &path {
            assert_eq!(pt.x1, 3.0);
            // dt1/dsigma = eps t1
            let want = -20.0 * (0.1 * pt.sigma).exp();
            assert!((pt.t1 - want).abs() < 1e-9 * want.abs(), "{pt:?}");
        }
    }

    #[test]
    fn refuses_beyond_contraction_bound() {
        let p = ModelParams::soliton_model(0.1, 0.5).unwrap();
        let s = QuadraticPhase::model();
        let r = integrate_characteristics(0.0, 0.0, (-1.0, 10.0), 11, &s, &p, &Default::default());
        assert!(matches!(r, Err(Error::SigmaOutOfRange { .. })));
    }

    #[test]
    fn fit_recovers_quadratic_exactly() {
        let path: Vec<_> = (0..21)
            .map(|i| {
                let x = -1.0 + 0.1 * i as f64;
                CharacteristicPoint { sigma: x, x1: 0.0, t1: 0.0, lambda: 0.3 - 1.7 * x + 0.4 * x * x }
            })
            .collect();
        assert!((fit_lambda_slope(&path, 1.0).unwrap() + 1.7).abs() < 1e-12);
        assert!(fit_lambda_slope(&path[..2], 1.0).is_err());
    }

    #[test]
    fn slope_matches_phi_for_model_and_cubic_phase() {
        let s2 = PolynomialPhase { t_coeffs: vec![0.0, 0.3, 0.5, 0.05], x_coeffs: vec![0.0, 0.2] };
        // The O(eps sigma^2) curvature of a cubic phase needs the narrower window.
        let cases: [(&dyn DriverPhase, f64); 2] = [(&QuadraticPhase::model(), 1.0), (&s2, 0.5)];
        for (s, window) in cases {
            for eps in [0.1, 0.05] {
                let p = ModelParams::soliton_model(eps, 0.5).unwrap();
                let events = find_resonances_omega2((-9.0, 9.0), 0.0, s, &p, &ResonanceSearch::default()).unwrap();
                let mut seen = 0;
                for ev in events.iter().filter(|e| e.is_simple) {
                    let path = integrate_characteristics(0.0, ev.t2_star / eps, (-window, window), 201, s, &p, &Default::default()).unwrap();
                    let slope = fit_lambda_slope(&path, window).unwrap();
                    assert!((slope - ev.phi).abs() < 1e-2 * ev.phi.abs(), "eps {eps}: {slope} vs {}", ev.phi);
                    seen += 1;
                }
                assert!(seen >= 1);
            }
        }
    }
}
