use super::{big_l, big_l_dt2, find_resonances_omega2, PhaseLabel, ResonanceEvent, ResonanceSearch};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::phase::DriverPhase;
use crate::quad;

/// `g` is refused where either denominator falls below this.
pub const SINGULARITY_GUARD: f64 = 1e-8;
/// Absolute tolerance of the `G` quadrature.
pub const G_ABS_TOL: f64 = 1e-9;

const MAX_INTERVALS: usize = 20_000;

/// `g = 1/L[chi_(1,-1)] + 1/L[chi_(1,1)]`.
pub fn g_factor(x2: f64, t2: f64, s: &dyn DriverPhase, params: &ModelParams) -> Result<f64> {
    let lm = big_l(PhaseLabel::MINUS, x2, t2, s, params);
    let lp = big_l(PhaseLabel::PLUS, x2, t2, s, params);
    let l_abs = lm.abs().min(lp.abs());
    if !(l_abs >= SINGULARITY_GUARD) {
        return Err(Error::Singularity { t2, l_abs });
    }
    Ok(1.0 / lm + 1.0 / lp)
}

fn check_resonance_free(t2_ref: f64, t2: f64, x2: f64, s: &dyn DriverPhase, params: &ModelParams) -> Result<()> {
    let (lo, hi) = (t2_ref.min(t2), t2_ref.max(t2));
    let search = ResonanceSearch {
        step: ResonanceSearch::default().step.min((hi - lo).max(1e-12) / 4.0),
        ..Default::default()
    };
    if let Some(ev) = find_resonances_omega2((lo, hi), x2, s, params, &search)?.first() {
        return Err(Error::CrossesResonance {
            from: t2_ref,
            to: t2,
            t2_star: ev.t2_star,
        });
    }
    for t in [t2_ref, t2] {
        g_factor(x2, t, s, params)?;
    }
    Ok(())
}

/// `G(t2) = int_{t2_ref}^{t2} g`, so `G(t2_ref) = 0`.
///
/// Refuses intervals that touch a resonant curve of `(1, +-1)`.
pub fn big_g(t2_ref: f64, t2: f64, x2: f64, s: &dyn DriverPhase, params: &ModelParams) -> Result<f64> {
    if !t2_ref.is_finite() || !t2.is_finite() {
        return Err(Error::invalid("t2", "must be finite"));
    }
    if t2 == t2_ref {
        return Ok(0.0);
    }
    check_resonance_free(t2_ref, t2, x2, s, params)?;
    let r = quad::integrate(
        |t| g_factor(x2, t, s, params).unwrap_or(f64::NAN),
        t2_ref,
        t2,
        G_ABS_TOL,
        MAX_INTERVALS,
    );
    if !r.value.is_finite() {
        return Err(Error::NonFinite { context: "G quadrature", time: t2 });
    }
    Ok(r.value)
}

/// `G(t2) - G(t2_ref)` using the phase's closed-form antiderivative when it
/// has one, falling back to [`big_g`].
pub fn g_between(t2_ref: f64, t2: f64, x2: f64, s: &dyn DriverPhase, params: &ModelParams) -> Result<f64> {
    let closed = (s.g_antiderivative(x2, t2, params), s.g_antiderivative(x2, t2_ref, params));
    match closed {
        (Some(a), Some(b)) => {
            if t2 != t2_ref {
                check_resonance_free(t2_ref, t2, x2, s, params)?;
            }
            Ok(a - b)
        }
        _ => big_g(t2_ref, t2, x2, s, params),
    }
}

/// Finite part of `G` at a simple crossing, with `G(t2_ref) = 0`.
///
/// Near the crossing `G(t2) = G_fin + ln|t2 - t2_star| / L'` where `L'` is
/// `dL/dt2` of the resonating label at `t2_star`. `t2_ref` must lie in a
/// resonance-free interval adjacent to the crossing.
pub fn g_finite_part(
    event: &ResonanceEvent,
    t2_ref: f64,
    s: &dyn DriverPhase,
    params: &ModelParams,
) -> Result<f64> {
    let x2 = event.x2;
    // Newton polish: an imprecise root turns the regularised integrand into a
    // near-pole of size |dt*| / (t - t*)^2.
    let mut t_star = event.t2_star;
    for _ in 0..3 {
        let lp = big_l_dt2(event.label, x2, t_star, s, params);
        let l = big_l(event.label, x2, t_star, s, params);
        if lp == 0.0 || l == 0.0 || (l / lp).abs() > 1e-6 {
            break;
        }
        t_star -= l / lp;
    }
    if t2_ref == t_star || !t2_ref.is_finite() {
        return Err(Error::invalid("t2_ref", "must differ from the crossing time"));
    }
    let lp = big_l_dt2(event.label, x2, t_star, s, params);
    if !(lp.abs() > 0.0) {
        return Err(Error::invalid("event", "crossing is not transversal"));
    }
    // Only the reference endpoint and the open interval need to be resonance-free.
    let inner = t_star + 1e-6 * (t2_ref - t_star);
    check_resonance_free(t2_ref, inner, x2, s, params)?;
    let other = if event.label == PhaseLabel::PLUS || event.label == PhaseLabel::PLUS.conj() {
        PhaseLabel::MINUS
    } else {
        PhaseLabel::PLUS
    };
    // 1/L_label - 1/(L' (t - t*)) is regular at t*; evaluated as a single fraction
    // to avoid cancellation.
    let integrand = |t: f64| {
        let l = big_l(event.label, x2, t, s, params);
        let lin = lp * (t - t_star);
        let reg = if lin == 0.0 || l == 0.0 { 0.0 } else { (lin - l) / (l * lin) };
        reg + 1.0 / big_l(other, x2, t, s, params)
    };
    let r = quad::integrate(integrand, t2_ref, t_star, G_ABS_TOL, MAX_INTERVALS);
    Ok(r.value - (t2_ref - t_star).abs().ln() / lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::QuadraticPhase;

    fn model() -> (ModelParams, QuadraticPhase) {
        (ModelParams::soliton_model(0.1, 0.5).unwrap(), QuadraticPhase::model())
    }

    fn closed(t: f64) -> f64 {
        0.5 * ((t - 2.0) / (t + 2.0)).abs().ln()
    }

    #[test]
    fn g_examples() {
        let (p, s) = model();
        assert!((g_factor(0.0, 1.0, &s, &p).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        for t in [0.3, 1.7, 3.1, 8.0] {
            assert_eq!(g_factor(0.0, t, &s, &p).unwrap(), g_factor(0.0, -t, &s, &p).unwrap());
        }
        let t = 1e4;
        assert!((g_factor(0.0, t, &s, &p).unwrap() * t * t / 2.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn g_refuses_singularity() {
        let (p, s) = model();
        assert!(matches!(g_factor(0.0, -2.0, &s, &p), Err(Error::Singularity { .. })));
        assert!(matches!(g_factor(0.0, 2.0 + 1e-10, &s, &p), Err(Error::Singularity { .. })));
    }

    #[test]
    fn big_g_matches_closed_form() {
        let (p, s) = model();
        let g = big_g(-9.0, -3.0, 0.0, &s, &p).unwrap();
        assert!((g - (closed(-3.0) - closed(-9.0))).abs() < 1e-6);
        assert_eq!(big_g(-5.0, -5.0, 0.0, &s, &p).unwrap(), 0.0);
        let via = s.g_antiderivative(0.0, -3.0, &p).unwrap() - s.g_antiderivative(0.0, -9.0, &p).unwrap();
        assert!((g - via).abs() < 1e-9);
    }

    #[test]
    fn g_between_agrees_with_quadrature() {
        let (p, s) = model();
        let poly = crate::phase::PolynomialPhase { t_coeffs: vec![0.0, 0.0, 0.5], x_coeffs: vec![] };
        for (a, b) in [(-9.0, -3.0), (-1.5, -0.5), (2.5, 7.0)] {
            let q = big_g(a, b, 0.0, &s, &p).unwrap();
            assert!((g_between(a, b, 0.0, &s, &p).unwrap() - q).abs() < 1e-9);
            assert!((g_between(a, b, 0.0, &poly, &p).unwrap() - q).abs() < 1e-12);
        }
        assert!(g_between(-3.0, 3.0, 0.0, &s, &p).is_err());
    }

    #[test]
    fn big_g_is_additive() {
        let (p, s) = model();
        for (a, b, c) in [(-9.0, -5.0, -2.5), (0.5, 1.0, 1.9), (8.0, 3.0, 2.2)] {
            let ab = big_g(a, b, 0.0, &s, &p).unwrap();
            let bc = big_g(b, c, 0.0, &s, &p).unwrap();
            let ac = big_g(a, c, 0.0, &s, &p).unwrap();
            assert!((ab + bc - ac).abs() < 1e-9, "{a} {b} {c}");
        }
    }

    #[test]
    fn big_g_refuses_crossing() {
        let (p, s) = model();
        match big_g(-9.0, -1.0, 0.0, &s, &p) {
            Err(Error::CrossesResonance { t2_star, .. }) => assert!((t2_star + 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert!(big_g(-9.0, -2.0, 0.0, &s, &p).is_err());
    }

    #[test]
    fn finite_part_matches_closed_form() {
        let (p, s) = model();
        let ev = find_resonances_omega2((-3.0, -1.0), 0.0, &s, &p, &ResonanceSearch::default()).unwrap()[0];
        // Near t* = -2, G(t) - G(ref) = closed(t) - closed(ref) and
        // closed(t) = 0.5 ln|t - 2| - 0.5 ln|t + 2|, with L' = -2 at t* = -2.
        for t_ref in [-2.5, -4.0, -1.5, -1.0] {
            let fin = g_finite_part(&ev, t_ref, &s, &p).unwrap();
            let lp = big_l_dt2(ev.label, 0.0, -2.0, &s, &p);
            assert_eq!(lp, -2.0);
            let want = 0.5 * 4f64.ln() - closed(t_ref);
            assert!((fin - want).abs() < 1e-8, "{t_ref}: {fin} vs {want}");
        }
    }

    #[test]
    fn finite_part_tolerates_an_imprecise_root() {
        let (p, s) = model();
        let mut ev = find_resonances_omega2((-3.0, -1.0), 0.0, &s, &p, &ResonanceSearch::default()).unwrap()[0];
        let exact = g_finite_part(&ev, -2.5, &s, &p).unwrap();
        ev.t2_star += 5e-11;
        let shifted = g_finite_part(&ev, -2.5, &s, &p).unwrap();
        assert!((exact - shifted).abs() < 1e-8, "{exact} vs {shifted}");
    }
}
