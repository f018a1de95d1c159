//! Periodic four-point (cubic Lagrange) interpolation on uniform grids.

use num_complex::Complex64;

/// Samples `values` (uniform, spacing `dx`, first node at `x0`, periodic with
/// period `n dx`) at an arbitrary `x`.
pub fn periodic_cubic(values: &[Complex64], x0: f64, dx: f64, x: f64) -> Complex64 {
    let n = values.len();
    let s = (x - x0) / dx;
    let base = s.floor();
    let u = s - base;
    let i = base as i64;
    let at = |j: i64| values[j.rem_euclid(n as i64) as usize];
    // Lagrange weights for nodes -1, 0, 1, 2.
    let wm1 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    let w0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    let w1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    let w2 = (u + 1.0) * u * (u - 1.0) / 6.0;
    at(i - 1) * wm1 + at(i) * w0 + at(i + 1) * w1 + at(i + 2) * w2
}
