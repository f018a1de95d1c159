use serde::{Deserialize, Serialize};

use super::{big_l, lambda_rate, PhaseLabel};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::phase::DriverPhase;

/// A crossing of a resonant curve `L[chi_label] = 0` along `t2` at fixed `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEvent {
    pub t2_star: f64,
    pub x2: f64,
    pub label: PhaseLabel,
    /// `d lambda / d sigma` at the crossing.
    pub phi: f64,
    /// `sqrt(|phi|)`, the layer stretching factor.
    pub alpha: f64,
    pub is_simple: bool,
    /// `|L|` re-evaluated at `t2_star`.
    pub l_residual: f64,
}

impl ResonanceEvent {
    pub fn t_fast(&self, params: &ModelParams) -> f64 {
        self.t2_star / (params.epsilon * params.epsilon)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ResonanceSearch {
    /// Scan step in `t2`.
    pub step: f64,
    /// Largest `|L|` accepted at a tangential (sign-preserving) zero.
    pub root_tol: f64,
    /// Two labels are considered to resonate together when the other one's `|L|` is below this.
    pub coincidence_tol: f64,
}

impl Default for ResonanceSearch {
    fn default() -> Self {
        ResonanceSearch {
            step: 1e-2,
            root_tol: 1e-10,
            coincidence_tol: 1e-8,
        }
    }
}

/// Bisection down to adjacent floating-point numbers: downstream phase
/// regularisations subtract `1 / (L' (t - t*))` and need the root to full precision.
fn bisect(l: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut la = l(a);
    let mut best = if la.abs() < l(b).abs() { a } else { b };
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let lm = l(mid);
        if lm.abs() < l(best).abs() {
            best = mid;
        }
        if lm == 0.0 {
            break;
        }
        if (lm < 0.0) == (la < 0.0) {
            a = mid;
            la = lm;
        } else {
            b = mid;
        }
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

/// Locates every crossing of `L[chi_label] = 0` for `t2` in `t2_range` at fixed `x2`.
///
/// Sign changes on a uniform scan grid are refined by bisection. Tangential
/// zeros (no sign change) found as local minima of `|L|` are reported with
/// `is_simple = false`. The result is sorted and duplicate-free.
pub fn find_resonances(
    label: PhaseLabel,
    t2_range: (f64, f64),
    x2: f64,
    s: &dyn DriverPhase,
    params: &ModelParams,
    search: &ResonanceSearch,
) -> Result<Vec<ResonanceEvent>> {
    let (lo, hi) = (t2_range.0.min(t2_range.1), t2_range.0.max(t2_range.1));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("t2_range", "must be finite"));
    }
    if !(search.step > 0.0) {
        return Err(Error::invalid("step", "scan step must be positive"));
    }
    if lo == hi {
        return Ok(Vec::new());
    }
    let l = |t2: f64| big_l(label, x2, t2, s, params);
    let n = ((hi - lo) / search.step).ceil().max(1.0) as usize;
    let ts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let ls: Vec<f64> = ts.iter().map(|&t| l(t)).collect();

    let mut roots: Vec<(f64, bool)> = Vec::new();
    for i in 0..=n {
        if ls[i] == 0.0 {
            let crossing = i == 0 || i == n || (ls[i - 1] < 0.0) != (ls[i + 1] < 0.0);
            roots.push((ts[i], crossing));
        } else if i < n && ls[i + 1] != 0.0 && (ls[i] < 0.0) != (ls[i + 1] < 0.0) {
            roots.push((bisect(l, ts[i], ts[i + 1]), true));
        }
    }
    // Tangencies: local minima of |L| without a sign change on either side.
    for i in 1..n {
        let (a, b, c) = (ls[i - 1], ls[i], ls[i + 1]);
        let same_sign = (a < 0.0) == (b < 0.0) && (b < 0.0) == (c < 0.0) && a != 0.0 && b != 0.0 && c != 0.0;
        if same_sign && b.abs() <= a.abs() && b.abs() <= c.abs() {
            let t = golden_min(|t| l(t).abs(), ts[i - 1], ts[i + 1]);
            if l(t).abs() < search.root_tol {
                roots.push((t, false));
            }
        }
    }

    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let merge_tol = 1e-3 * search.step;
    let mut events: Vec<ResonanceEvent> = Vec::new();
    for (t2, crossing) in roots {
        if let Some(last) = events.last() {
            if (t2 - last.t2_star).abs() < merge_tol {
                continue;
            }
        }
        let phi = lambda_rate(x2, t2, s);
        let coincident = PhaseLabel::OMEGA2
            .iter()
            .filter(|&&o| o != label && o != label.conj())
            .any(|&o| big_l(o, x2, t2, s, params).abs() < search.coincidence_tol);
        events.push(ResonanceEvent {
            t2_star: t2,
            x2,
            label,
            phi,
            alpha: phi.abs().sqrt(),
            is_simple: crossing && !coincident && phi.abs() > 1e-12,
            l_residual: l(t2).abs(),
        });
    }
    Ok(events)
}

/// Crossings of every distinct label in `{(+-1, +-1)}`; conjugate labels
/// share their curves and are reported once. Sorted by `t2`, then label.
pub fn find_resonances_omega2(
    t2_range: (f64, f64),
    x2: f64,
    s: &dyn DriverPhase,
    params: &ModelParams,
    search: &ResonanceSearch,
) -> Result<Vec<ResonanceEvent>> {
    let mut all = Vec::new();
    for label in [PhaseLabel::PLUS, PhaseLabel::MINUS] {
        all.extend(find_resonances(label, t2_range, x2, s, params, search)?);
    }
    all.sort_by(|a, b| a.t2_star.total_cmp(&b.t2_star).then(b.label.cmp(&a.label)));
    Ok(all)
}

/// Distinct crossing times, merging events closer than `tol`.
pub fn distinct_times(events: &[ResonanceEvent], tol: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = events.iter().map(|e| e.t2_star).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < tol);
    ts
}
