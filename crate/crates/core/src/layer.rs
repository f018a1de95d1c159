//! The resonance layer equation `i w' + kappa w + F conj(w) = 0` and the
//! connection coefficients read off its asymptotics at `kappa -> +-infinity`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{layer_pair, C2Phase, ConnectionCoefficients};
use crate::error::{Error, Result};
use crate::ode::Dopri5;
use crate::par::Exec;

/// Smallest `|kappa|` at which the WKB boundary form is accepted.
pub const KAPPA_MIN: f64 = 10.0;
/// Smallest half-width `K` accepted by the integrator.
pub const K_MIN: f64 = 50.0;
/// Loosest local tolerance accepted by the integrator.
pub const TOL_MAX: f64 = 1e-10;
/// Relative drift allowed between truncations `K` and `2K`.
pub const DRIFT_MAX: f64 = 1e-2;
/// Largest arg deviation for a phase candidate to count as a fit.
pub const PHASE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerState {
    pub kappa: f64,
    pub w: Complex64,
    pub big_f: f64,
}

/// `dw/dkappa = i kappa w + i F conj(w)`.
pub fn plre_derivative(state: &LayerState) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    i * state.kappa * state.w + i * state.big_f * state.w.conj()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSide {
    Left,
    Right,
}

/// `kappa^2 / 2 - (F^2 / 2) ln|kappa|`.
pub fn wkb_phase(kappa: f64, big_f: f64) -> f64 {
    0.5 * kappa * kappa - 0.5 * big_f * big_f * kappa.abs().ln()
}

fn check_kappa(kappa: f64, side: LayerSide) -> Result<()> {
    let on_side = match side {
        LayerSide::Left => kappa < 0.0,
        LayerSide::Right => kappa > 0.0,
    };
    if !(kappa.abs() >= KAPPA_MIN) || !on_side {
        return Err(Error::KappaTooSmall { kappa: kappa.abs(), min: KAPPA_MIN });
    }
    Ok(())
}

/// `C exp(i (kappa^2/2 - (F^2/2) ln|kappa|))`, for `|kappa| >= 10` on the given side.
pub fn wkb_boundary(c: Complex64, kappa: f64, big_f: f64, side: LayerSide) -> Result<Complex64> {
    check_kappa(kappa, side)?;
    Ok(c * Complex64::from_polar(1.0, wkb_phase(kappa, big_f)))
}

/// Inverse of the right boundary form: `w / exp(i (kappa^2/2 - (F^2/2) ln kappa))`.
pub fn extract_out_coefficient(w: Complex64, kappa: f64, big_f: f64) -> Result<Complex64> {
    check_kappa(kappa, LayerSide::Right)?;
    Ok(w * Complex64::from_polar(1.0, -wkb_phase(kappa, big_f)))
}

/// Validates a layer run configuration.
pub fn check_run(big_f: f64, k: f64, tol: f64) -> Result<()> {
    if !(big_f >= 0.0) || !big_f.is_finite() {
        return Err(Error::invalid("layer.F", "must be finite and non-negative"));
    }
    if !(k >= K_MIN) || !k.is_finite() {
        return Err(Error::invalid("layer.K", format!("half-width {k} below {K_MIN}")));
    }
    if !(tol > 0.0 && tol <= TOL_MAX) {
        return Err(Error::invalid("layer.tol", format!("{tol} outside (0, {TOL_MAX}]")));
    }
    Ok(())
}

fn rhs2(kappa: f64, big_f: f64, y: &[f64]) -> [f64; 2] {
    // w = a + i b: a' = (F - kappa) b, b' = (F + kappa) a
    [(big_f - kappa) * y[1], (big_f + kappa) * y[0]]
}

/// Values at `kappa = +K` of the solutions entering with `C = 1` and `C = i`.
///
/// Both are integrated as one system, so the adaptive step sequence is shared
/// and the discrete layer map is exactly real-linear.
pub fn integrate_basis(big_f: f64, k: f64, tol: f64) -> Result<(Complex64, Complex64)> {
    check_run(big_f, k, tol)?;
    let w1 = wkb_boundary(Complex64::new(1.0, 0.0), -k, big_f, LayerSide::Left)?;
    let wi = wkb_boundary(Complex64::new(0.0, 1.0), -k, big_f, LayerSide::Left)?;
    let f = |kappa: f64, y: &[f64; 4]| {
        let a = rhs2(kappa, big_f, &y[..2]);
        let b = rhs2(kappa, big_f, &y[2..]);
        [a[0], a[1], b[0], b[1]]
    };
    let (y, _) = Dopri5::new(tol).integrate(f, -k, [w1.re, w1.im, wi.re, wi.im], k, |_, _| {})?;
    Ok((Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])))
}

/// `w(+K)` for the solution with left asymptotics `C_in exp(i(kappa^2/2 - (F^2/2) ln|kappa|))`.
pub fn integrate_layer(c_in: Complex64, big_f: f64, k: f64, tol: f64) -> Result<Complex64> {
    let (o1, oi) = integrate_basis(big_f, k, tol)?;
    Ok(c_in.re * o1 + c_in.im * oi)
}

/// Direct integration of a single solution from `kappa_from` to `kappa_to`,
/// recording every accepted step.
pub fn layer_trajectory(w0: Complex64, big_f: f64, kappa_from: f64, kappa_to: f64, tol: f64) -> Result<Vec<LayerState>> {
    let mut path = Vec::new();
    Dopri5::new(tol).integrate(
        |kappa, y: &[f64; 2]| rhs2(kappa, big_f, y),
        kappa_from,
        [w0.re, w0.im],
        kappa_to,
        |kappa, y| path.push(LayerState { kappa, w: Complex64::new(y[0], y[1]), big_f }),
    )?;
    Ok(path)
}

/// `(c1, c2)` from the two basis runs: `c1 = (O_1 - i O_i) / 2`, `c2 = (O_1 + i O_i) / 2`.
pub fn coefficients_from_outputs(o1: Complex64, oi: Complex64, big_f: f64) -> ConnectionCoefficients {
    let i = Complex64::new(0.0, 1.0);
    ConnectionCoefficients { c1: 0.5 * (o1 - i * oi), c2: 0.5 * (o1 + i * oi), f_used: big_f }
}

fn connection_at(big_f: f64, k: f64, tol: f64) -> Result<ConnectionCoefficients> {
    let (w1, wi) = integrate_basis(big_f, k, tol)?;
    let o1 = extract_out_coefficient(w1, k, big_f)?;
    let oi = extract_out_coefficient(wi, k, big_f)?;
    Ok(coefficients_from_outputs(o1, oi, big_f))
}

/// Numerically extracted pair at truncation `K`, with the `2K` re-run used as
/// the convergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericConnection {
    pub coeffs: ConnectionCoefficients,
    pub coeffs_2k: ConnectionCoefficients,
    pub k: f64,
    /// `max(|dc1|, |dc2|) / |c1|` between `K` and `2K`.
    pub drift: f64,
}

impl NumericConnection {
    pub fn converged(&self) -> bool {
        self.drift < DRIFT_MAX
    }
}

fn flat(c: &ConnectionCoefficients) -> [f64; 4] {
    [c.c1.re, c.c1.im, c.c2.re, c.c2.im]
}

/// Runs the layer at `K` and `2K` without judging the drift.
pub fn connection_numeric_unchecked(big_f: f64, k: f64, tol: f64) -> Result<NumericConnection> {
    let a = connection_at(big_f, k, tol)?;
    let b = connection_at(big_f, 2.0 * k, tol)?;
    let drift = (a.c1 - b.c1).norm().max((a.c2 - b.c2).norm()) / a.c1.norm();
    Ok(NumericConnection { coeffs: a, coeffs_2k: b, k, drift })
}

/// Connection pair extracted at `K`; fails if it moves by `DRIFT_MAX` or more at `2K`.
pub fn connection_matrix_numeric(big_f: f64, k: f64, tol: f64) -> Result<NumericConnection> {
    let r = connection_numeric_unchecked(big_f, k, tol)?;
    if !r.converged() {
        return Err(Error::Convergence {
            drift: r.drift,
            k,
            k2: 2.0 * k,
            at_k: flat(&r.coeffs),
            at_2k: flat(&r.coeffs_2k),
        });
    }
    Ok(r)
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Matching,
    Theorem,
    Inconclusive,
}

impl Verdict {
    pub fn phase(self) -> Option<C2Phase> {
        match self {
            Verdict::Matching => Some(C2Phase::Matching),
            Verdict::Theorem => Some(C2Phase::Theorem),
            Verdict::Inconclusive => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Matching => "matching",
            Verdict::Theorem => "theorem",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One line of the connection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct LayerRecord {
    pub F: f64,
    pub K: f64,
    pub c1_re: f64,
    pub c1_im: f64,
    pub c2_re: f64,
    pub c2_im: f64,
    pub drift: f64,
    pub winner: Verdict,
    pub converged: bool,
    pub abs_c1: f64,
    pub abs_c1_expected: f64,
    pub abs_c2_sq: f64,
    pub reflection_rhs: f64,
    pub determinant: f64,
    pub arg_c2: f64,
    pub arg_matching: f64,
    pub arg_theorem: f64,
}

impl LayerRecord {
    pub fn coeffs(&self) -> ConnectionCoefficients {
        ConnectionCoefficients {
            c1: Complex64::new(self.c1_re, self.c1_im),
            c2: Complex64::new(self.c2_re, self.c2_im),
            f_used: self.F,
        }
    }

    pub fn dev_matching(&self) -> f64 {
        angle_diff(self.arg_c2, self.arg_matching).abs()
    }

    pub fn dev_theorem(&self) -> f64 {
        angle_diff(self.arg_c2, self.arg_theorem).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub verdict: Verdict,
    pub tolerance: f64,
    pub max_dev_matching: f64,
    pub max_dev_theorem: f64,
    pub records: Vec<LayerRecord>,
}

fn record(n: &NumericConnection, verdict: Verdict) -> LayerRecord {
    let c = n.coeffs;
    let big_f = c.f_used;
    LayerRecord {
        F: big_f,
        K: n.k,
        c1_re: c.c1.re,
        c1_im: c.c1.im,
        c2_re: c.c2.re,
        c2_im: c.c2.im,
        drift: n.drift,
        winner: verdict,
        converged: n.converged(),
        abs_c1: c.c1.norm(),
        abs_c1_expected: (0.5 * PI * big_f * big_f).exp(),
        abs_c2_sq: c.c2.norm_sqr(),
        reflection_rhs: 2.0 * (c.c1.norm_sqr() - 1.0),
        determinant: c.c1.norm_sqr() - c.c2.norm_sqr(),
        arg_c2: c.c2.arg(),
        arg_matching: layer_pair(big_f, C2Phase::Matching).c2.arg(),
        arg_theorem: layer_pair(big_f, C2Phase::Theorem).c2.arg(),
    }
}

/// Compares measured `arg c2` with both analytic candidates. A candidate wins
/// only if it fits every `F` within `PHASE_TOL` and the other one does not.
pub fn arbitrate(results: &[NumericConnection]) -> PhaseReport {
    let mut records: Vec<LayerRecord> = results.iter().map(|n| record(n, Verdict::Inconclusive)).collect();
    let max_a = records.iter().map(LayerRecord::dev_matching).fold(0.0, f64::max);
    let max_b = records.iter().map(LayerRecord::dev_theorem).fold(0.0, f64::max);
    let verdict = if records.is_empty() {
        Verdict::Inconclusive
    } else if max_a < PHASE_TOL && max_b >= PHASE_TOL {
        Verdict::Matching
    } else if max_b < PHASE_TOL && max_a >= PHASE_TOL {
        Verdict::Theorem
    } else {
        Verdict::Inconclusive
    };
    for r in &mut records {
        r.winner = verdict;
    }
    PhaseReport { verdict, tolerance: PHASE_TOL, max_dev_matching: max_a, max_dev_theorem: max_b, records }
}

/// Runs every `F` (independent jobs) at `K` and `2K`.
pub fn layer_sweep(f_list: &[f64], k: f64, tol: f64, exec: Exec) -> Vec<Result<NumericConnection>> {
    exec.map(f_list, |&big_f| connection_numeric_unchecked(big_f, k, tol))
}

/// Referees the two analytic `c2` phases against the integrated layer.
pub fn resolve_c2_phase(f_list: &[f64], k: f64, tol: f64) -> Result<PhaseReport> {
    if f_list.is_empty() {
        return Err(Error::invalid("layer.F", "F list is empty"));
    }
    for &big_f in f_list {
        if !(big_f > 0.0 && big_f <= 1.5) {
            return Err(Error::invalid("layer.F", format!("{big_f} outside (0, 1.5]")));
        }
    }
    let mut runs = Vec::with_capacity(f_list.len());
    for r in layer_sweep(f_list, k, tol, Exec::default()) {
        let n = r?;
        if !n.converged() {
            return Err(Error::Convergence {
                drift: n.drift,
                k,
                k2: 2.0 * k,
                at_k: flat(&n.coeffs),
                at_2k: flat(&n.coeffs_2k),
            });
        }
        runs.push(n);
    }
    Ok(arbitrate(&runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn derivative_examples() {
        let zero = LayerState { kappa: 3.0, w: Complex64::new(0.0, 0.0), big_f: 1.0 };
        assert_eq!(plre_derivative(&zero), Complex64::new(0.0, 0.0));
        let s = LayerState { kappa: 0.0, w: Complex64::new(1.0, 0.0), big_f: 1.0 };
        assert_eq!(plre_derivative(&s), Complex64::new(0.0, 1.0));
        // the real form used by the integrator agrees with the complex one
        let s = LayerState { kappa: -2.3, w: Complex64::new(0.4, -1.1), big_f: 0.7 };
        let d = rhs2(s.kappa, s.big_f, &[s.w.re, s.w.im]);
        assert!((Complex64::new(d[0], d[1]) - plre_derivative(&s)).norm() < 1e-15);
    }

    #[test]
    fn boundary_and_extraction() {
        let c = Complex64::new(0.3, -0.7);
        let w = wkb_boundary(c, -50.0, 0.0, LayerSide::Left).unwrap();
        assert!((w - c * Complex64::from_polar(1.0, 1250.0)).norm() < 1e-12);
        for kappa in [10.0, 57.5, 200.0] {
            let w = wkb_boundary(c, kappa, 0.5, LayerSide::Right).unwrap();
            assert!((w.norm() - c.norm()).abs() < 1e-15);
            let back = extract_out_coefficient(w, kappa, 0.5).unwrap();
            assert!((back - c).norm() < 1e-15);
            assert_eq!(back.norm(), back.norm());
        }
        assert!(matches!(wkb_boundary(c, -9.0, 0.5, LayerSide::Left), Err(Error::KappaTooSmall { .. })));
        assert!(wkb_boundary(c, 20.0, 0.5, LayerSide::Left).is_err());
        assert!(extract_out_coefficient(c, 5.0, 0.5).is_err());
    }

    #[test]
    fn wkb_residual_is_small() {
        // Pointwise, the ansatz leaves the non-resonant term i F conj(w) (size F |w|),
        // which oscillates like exp(-2 i theta). Its average over one period of that
        // oscillation vanishes; what remains on the resonant harmonic is O(F^2 / kappa).
        let (big_f, kappa0) = (0.5, -50.0);
        let c = Complex64::new(1.0, 0.0);
        let w = |k: f64| wkb_boundary(c, k, big_f, LayerSide::Left).unwrap();
        let residual = |k: f64| {
            let h = 1e-6;
            let dw = (w(k + h) - w(k - h)) / (2.0 * h);
            dw - plre_derivative(&LayerState { kappa: k, w: w(k), big_f })
        };
        let full = residual(kappa0).norm();
        assert!((full - big_f).abs() < 0.01, "{full}");
        let period = PI / kappa0.abs();
        let n = 400;
        let mut avg = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let k = kappa0 - 0.5 * period + period * (j as f64 + 0.5) / n as f64;
            avg += residual(k) * Complex64::from_polar(1.0, -wkb_phase(k, big_f));
        }
        avg /= n as f64;
        assert!(avg.norm() < 0.03, "{}", avg.norm());
    }

    #[test]
    fn decoupled_limit() {
        let c = Complex64::new(0.6, 0.8);
        let w = integrate_layer(c, 0.0, 50.0, 1e-12).unwrap();
        let out = extract_out_coefficient(w, 50.0, 0.0).unwrap();
        assert!((out - c).norm() < 1e-8, "{out}");
        let n = connection_matrix_numeric(1e-4, 50.0, TOL).unwrap();
        assert!((n.coeffs.c1 - 1.0).norm() < 1e-6 && n.coeffs.c2.norm() < 1e-3);
    }

    #[test]
    fn rejects_bad_runs() {
        let c = Complex64::new(1.0, 0.0);
        assert!(matches!(integrate_layer(c, 0.5, 10.0, TOL), Err(Error::InvalidParameter { name: "layer.K", .. })));
        assert!(matches!(integrate_layer(c, 0.5, 50.0, 1e-6), Err(Error::InvalidParameter { name: "layer.tol", .. })));
        assert!(resolve_c2_phase(&[], 50.0, TOL).is_err());
        assert!(resolve_c2_phase(&[2.0], 50.0, TOL).is_err());
    }

    #[test]
    fn growth_law_along_trajectory() {
        for big_f in [0.25, 1.0] {
            let w0 = wkb_boundary(Complex64::new(0.3, 0.9), -30.0, big_f, LayerSide::Left).unwrap();
            let path = layer_trajectory(w0, big_f, -30.0, 30.0, 1e-12).unwrap();
            // d|w|^2/dkappa = 2 F Im(w^2), compared on the accepted steps with the trapezoid rule.
            let mut worst: f64 = 0.0;
            for p in path.windows(2) {
                let (a, b) = (p[0], p[1]);
                let h = b.kappa - a.kappa;
                let lhs = (b.w.norm_sqr() - a.w.norm_sqr()) / h;
                let rhs = big_f * ((a.w * a.w).im + (b.w * b.w).im);
                let scale = 2.0 * big_f * b.w.norm_sqr().max(a.w.norm_sqr());
                worst = worst.max((lhs - rhs).abs() / scale / (h * h).max(1e-12).sqrt().max(1.0));
            }
            assert!(worst < 1e-2, "F {big_f}: {worst}");
        }
    }

    #[test]
    fn basis_combination_matches_direct_run() {
        let (big_f, k) = (0.5, 50.0);
        for c in [Complex64::new(1.0, 0.0), Complex64::new(-0.3, 0.8)] {
            let via_basis = integrate_layer(c, big_f, k, TOL).unwrap();
            let w0 = wkb_boundary(c, -k, big_f, LayerSide::Left).unwrap();
            let direct = layer_trajectory(w0, big_f, -k, k, TOL).unwrap().last().unwrap().w;
            assert!((via_basis - direct).norm() < 1e-5 * via_basis.norm(), "{via_basis} vs {direct}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn layer_map_is_real_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, re in -1.0f64..1.0, im in -1.0f64..1.0) {
            let (big_f, k) = (0.5, 50.0);
            let c = Complex64::new(re, im);
            let c2 = Complex64::new(-0.4, 0.25);
            let lhs = integrate_layer(a * c + b * c2, big_f, k, TOL).unwrap();
            let rhs = a * integrate_layer(c, big_f, k, TOL).unwrap() + b * integrate_layer(c2, big_f, k, TOL).unwrap();
            prop_assert!((lhs - rhs).norm() < 10.0 * TOL);
        }
    }

    #[test]
    fn conjugate_input_is_consistent() {
        let n = connection_numeric_unchecked(0.5, 50.0, TOL).unwrap().coeffs;
        let c = Complex64::new(0.2, -0.9);
        let out = extract_out_coefficient(integrate_layer(c.conj(), 0.5, 50.0, TOL).unwrap(), 50.0, 0.5).unwrap();
        assert!((out - n.apply(c.conj())).norm() < 1e-8);
    }

    #[test]
    fn angle_wrapping() {
        assert!((angle_diff(3.1, -3.1) - (6.2 - 2.0 * PI)).abs() < 1e-12);
        assert_eq!(angle_diff(0.5, 0.25), 0.25);
    }
}
