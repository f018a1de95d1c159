//! Direct integration of `U_tt = U_xx - (1 + eps f cos(S(eps^2 x, eps^2 t) / eps^2)) U - gamma U^3`
//! on a periodic grid, and demodulation of the carrier.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::g_factor;
use crate::par::Exec;
use crate::params::ModelParams;
use crate::phase::DriverPhase;

/// Largest admissible time step, as a fraction of `dx`.
pub const CFL: f64 = 0.5;
/// Largest admissible time step in absolute terms (resolves the unit carrier).
pub const DT_MAX: f64 = 0.05;

/// Periodic uniform grid `x_i = x_min + i dx`, `i = 0..nx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub dx: f64,
    pub nx: usize,
}

impl Grid {
    /// `[-half_extent, half_extent)` with `nx` points; `x = 0` sits at index `nx / 2` for even `nx`.
    pub fn symmetric(half_extent: f64, nx: usize) -> Result<Self> {
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(Error::invalid("grid.x_extent", "must be positive"));
        }
        if nx < 16 || !nx.is_multiple_of(2) {
            return Err(Error::invalid("grid.nx", "need an even point count >= 16"));
        }
        Ok(Grid { x_min: -half_extent, dx: 2.0 * half_extent / nx as f64, nx })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.nx as f64 * self.dx
    }

    /// Index of the grid point nearest to `x`.
    pub fn index_of(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx).round() as i64;
        i.rem_euclid(self.nx as i64) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FieldState {
    pub fn zeros(grid: Grid, t: f64) -> Self {
        FieldState { grid, t, u: vec![0.0; grid.nx], v: vec![0.0; grid.nx] }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

/// Checks the step against the CFL and carrier-resolution limits.
pub fn check_dt(dt: f64, grid: &Grid) -> Result<()> {
    if !(dt > 0.0) || dt > DT_MAX || dt > CFL * grid.dx {
        return Err(Error::invalid(
            "grid.dt",
            format!("dt = {dt} must lie in (0, min({DT_MAX}, {CFL} dx = {})]", CFL * grid.dx),
        ));
    }
    Ok(())
}

/// `1 + eps f cos(S(eps^2 x, eps^2 t) / eps^2)`.
pub fn potential(x: f64, t: f64, s: &dyn DriverPhase, params: &ModelParams) -> f64 {
    let e2 = params.epsilon * params.epsilon;
    1.0 + params.epsilon * params.f * (s.value(e2 * x, e2 * t) / e2).cos()
}

/// Initial data from the soliton envelope with the G-phase:
///
/// ```text
/// U = 2 eps Re[ sqrt(2) eta sech(eta zeta) exp(i (k x + omega t + eta^2 t2 / 2 - f^2/(4 omega) G(t2))) ]
/// ```
///
/// with `zeta = eps (omega x + k t)`, `t2 = eps^2 t`, and `V` its exact `t`-derivative.
/// `G` is the phase's closed-form antiderivative when it has one, otherwise the
/// reference is placed at `t_start`.
pub fn kg_initialize(params: &ModelParams, s: &dyn DriverPhase, grid: Grid, t_start: f64, eta: f64) -> Result<FieldState> {
    let eps = params.epsilon;
    let e2 = eps * eps;
    let t2 = e2 * t_start;
    let decay = 1.0 / (eta * eps * grid.x_min.abs().min(grid.x_max().abs())).cosh();
    if !(decay < 1e-10) {
        return Err(Error::invalid(
            "grid.x_extent",
            format!("envelope decays only to {decay:e} at the boundary (need < 1e-10)"),
        ));
    }
    let c = params.f * params.f / (4.0 * params.omega);
    let mut st = FieldState::zeros(grid, t_start);
    for i in 0..grid.nx {
        let x = grid.x(i);
        let x2 = e2 * x;
        let g = if params.f == 0.0 { 0.0 } else { g_factor(x2, t2, s, params)? };
        let big_g = s.g_antiderivative(x2, t2, params).unwrap_or(0.0);
        let zeta = eps * (params.omega * x + params.k * t_start);
        let sech = 1.0 / (eta * zeta).cosh();
        let amp = 2f64.sqrt() * eta * sech;
        let damp = -amp * eta * (eta * zeta).tanh() * eps * params.k;
        let theta = params.k * x + params.omega * t_start + 0.5 * eta * eta * t2 - c * big_g;
        let dtheta = params.omega + e2 * (0.5 * eta * eta - c * g);
        let rot = Complex64::from_polar(1.0, theta);
        let phi = amp * rot;
        let dphi = damp * rot + Complex64::new(0.0, dtheta) * phi;
        st.u[i] = 2.0 * eps * phi.re;
        st.v[i] = 2.0 * eps * dphi.re;
    }
    Ok(st)
}

/// Stormer-Verlet (kick-drift-kick) integrator with a reusable force buffer.
pub struct KgStepper<'a> {
    params: ModelParams,
    s: &'a dyn DriverPhase,
    exec: Exec,
    acc: Vec<f64>,
    acc_time: Option<f64>,
}

impl<'a> KgStepper<'a> {
    pub fn new(params: ModelParams, s: &'a dyn DriverPhase, exec: Exec) -> Self {
        KgStepper { params, s, exec, acc: Vec::new(), acc_time: None }
    }

    fn compute_acc(&mut self, state: &FieldState) {
        let n = state.grid.nx;
        self.acc.resize(n, 0.0);
        let (u, g, t) = (&state.u, state.grid, state.t);
        let (params, s) = (&self.params, self.s);
        let inv_dx2 = 1.0 / (g.dx * g.dx);
        self.exec.fill_indexed(&mut self.acc, |i| {
            let left = u[if i == 0 { n - 1 } else { i - 1 }];
            let right = u[if i + 1 == n { 0 } else { i + 1 }];
            let ui = u[i];
            (left - 2.0 * ui + right) * inv_dx2 - potential(g.x(i), t, s, params) * ui - params.gamma * ui * ui * ui
        });
        self.acc_time = Some(t);
    }

    /// Advances `state` by one step of size `dt`.
    pub fn step(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        check_dt(dt, &state.grid)?;
        if self.acc_time != Some(state.t) || self.acc.len() != state.grid.nx {
            self.compute_acc(state);
        }
        let h = 0.5 * dt;
        let acc = &self.acc;
        self.exec.for_each_indexed(&mut state.v, |i, v| *v += h * acc[i]);
        let v = &state.v;
        self.exec.for_each_indexed(&mut state.u, |i, u| *u += dt * v[i]);
        state.t += dt;
        self.compute_acc(state);
        let acc = &self.acc;
        self.exec.for_each_indexed(&mut state.v, |i, v| *v += h * acc[i]);
        if !state.is_finite() {
            return Err(Error::NonFinite { context: "Klein-Gordon field", time: state.t });
        }
        Ok(())
    }

    /// Forgets the cached force (call after modifying the state externally).
    pub fn invalidate(&mut self) {
        self.acc_time = None;
    }
}

/// One step with a fresh stepper.
pub fn kg_step(state: &FieldState, dt: f64, params: &ModelParams, s: &dyn DriverPhase) -> Result<FieldState> {
    let mut out = state.clone();
    KgStepper::new(*params, s, Exec::default()).step(&mut out, dt)?;
    Ok(out)
}

fn apply_k(u: &[f64], dx: f64, i: usize) -> f64 {
    let n = u.len();
    let left = u[if i == 0 { n - 1 } else { i - 1 }];
    let right = u[if i + 1 == n { 0 } else { i + 1 }];
    -(left - 2.0 * u[i] + right) / (dx * dx) + u[i]
}

/// Energy conserved exactly by the scheme for `f = gamma = 0`:
/// `1/2 |V|^2 + 1/2 <U, K U> - dt^2/8 |K U|^2` (times `dx`), with `K = -D^2 + 1`.
pub fn discrete_energy(state: &FieldState, dt: f64) -> f64 {
    let dx = state.grid.dx;
    let mut e = 0.0;
    for i in 0..state.u.len() {
        let ku = apply_k(&state.u, dx, i);
        e += 0.5 * state.v[i] * state.v[i] + 0.5 * state.u[i] * ku - dt * dt / 8.0 * ku * ku;
    }
    e * dx
}

/// Pointwise energy density `1/2 V^2 + 1/2 (D+ U)^2 + 1/2 U^2 + gamma/4 U^4` (driver excluded).
pub fn energy_density(state: &FieldState, gamma: f64) -> Vec<f64> {
    let n = state.u.len();
    let dx = state.grid.dx;
    (0..n)
        .map(|i| {
            let (u, v) = (state.u[i], state.v[i]);
            let du = (state.u[(i + 1) % n] - u) / dx;
            0.5 * v * v + 0.5 * du * du + 0.5 * u * u + 0.25 * gamma * u * u * u * u
        })
        .collect()
}

/// Largest energy density within `width` points of either end of the grid, relative to the peak.
pub fn boundary_energy_ratio(state: &FieldState, gamma: f64, width: usize) -> f64 {
    let e = energy_density(state, gamma);
    let peak = e.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let n = e.len();
    let w = width.min(n / 2);
    let edge = e[..w].iter().chain(&e[n - w..]).map(|x| x.abs()).fold(0.0, f64::max);
    edge / peak
}

/// `A(x) = (U - i V / omega) exp(-i (k x + omega t)) / 2`.
pub fn demodulate(state: &FieldState, params: &ModelParams) -> Vec<Complex64> {
    (0..state.grid.nx)
        .map(|i| demodulate_point(state.u[i], state.v[i], state.grid.x(i), state.t, params))
        .collect()
}

pub fn demodulate_point(u: f64, v: f64, x: f64, t: f64, params: &ModelParams) -> Complex64 {
    0.5 * Complex64::new(u, -v / params.omega) * Complex64::from_polar(1.0, -(params.k * x + params.omega * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::QuadraticPhase;
    use std::f64::consts::PI;

    fn linear(k: f64) -> ModelParams {
        ModelParams::new(0.1, 0.0, 0.0, k).unwrap()
    }

    #[test]
    fn grid_and_dt_checks() {
        let g = Grid::symmetric(300.0, 6000).unwrap();
        assert_eq!(g.dx, 0.1);
        assert_eq!(g.x(3000), 0.0);
        assert_eq!(g.index_of(0.0), 3000);
        assert_eq!(g.index_of(300.0), 0);
        assert!(check_dt(0.025, &g).is_ok());
        assert!(check_dt(0.06, &g).is_err());
        let fine = Grid::symmetric(10.0, 1000).unwrap();
        assert!(matches!(check_dt(0.02, &fine), Err(Error::InvalidParameter { name: "grid.dt", .. })));
        assert!(Grid::symmetric(10.0, 15).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        let p = ModelParams::soliton_model(0.1, 0.5).unwrap();
        let s = QuadraticPhase::model();
        let st = FieldState::zeros(Grid::symmetric(50.0, 500).unwrap(), -900.0);
        let out = kg_step(&st, 0.025, &p, &s).unwrap();
        assert!(out.u.iter().chain(&out.v).all(|&x| x == 0.0));
        assert_eq!(out.t, -900.0 + 0.025);
    }

    fn mode_error(dx: f64, dt: f64) -> f64 {
        // U = cos(k x - omega t) on a periodic box holding 4 wavelengths
        let k = 2.0 * PI / 5.0;
        let p = linear(0.0);
        let s = QuadraticPhase::model();
        let nx = (20.0 / dx).round() as usize;
        let grid = Grid { x_min: 0.0, dx, nx };
        let w = (1.0 + k * k).sqrt();
        let mut st = FieldState::zeros(grid, 0.0);
        for i in 0..nx {
            st.u[i] = (k * grid.x(i)).cos();
            st.v[i] = w * (k * grid.x(i)).sin();
        }
        let mut stepper = KgStepper::new(p, &s, Exec::Sequential);
        let t_end = 20.0;
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            stepper.step(&mut st, dt).unwrap();
        }
        // u = cos(k x - w t) projects onto (cos(w t), sin(w t)).
        let (mut c, mut sn) = (0.0, 0.0);
        for i in 0..nx {
            c += st.u[i] * (k * grid.x(i)).cos();
            sn += st.u[i] * (k * grid.x(i)).sin();
        }
        let phase = sn.atan2(c);
        let turns = ((w * st.t - phase) / (2.0 * PI)).round();
        let measured = (phase + 2.0 * PI * turns) / st.t;
        ((measured - w) / w).abs()
    }

    #[test]
    fn linear_dispersion_and_second_order() {
        let e1 = mode_error(0.05, 0.025);
        let e2 = mode_error(0.025, 0.0125);
        assert!(e1 < 1e-3, "{e1}");
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn modified_energy_is_conserved() {
        let p = linear(0.0);
        let s = QuadraticPhase::model();
        let grid = Grid::symmetric(20.0, 400).unwrap();
        let mut st = FieldState::zeros(grid, 0.0);
        for i in 0..grid.nx {
            let x = grid.x(i);
            st.u[i] = (-x * x).exp() * (3.0 * x).cos();
            st.v[i] = 0.3 * (-x * x / 2.0).exp();
        }
        let dt = 0.05;
        let e0 = discrete_energy(&st, dt);
        let mut stepper = KgStepper::new(p, &s, Exec::default());
        for _ in 0..10_000 {
            stepper.step(&mut st, dt).unwrap();
        }
        let drift = (discrete_energy(&st, dt) - e0).abs() / e0;
        assert!(drift < 1e-6, "{drift}");
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let p = ModelParams::soliton_model(0.1, 0.5).unwrap();
        let s = QuadraticPhase::model();
        let grid = Grid::symmetric(300.0, 6000).unwrap();
        let a0 = kg_initialize(&p, &s, grid, -900.0, 1.0).unwrap();
        let (mut a, mut b) = (a0.clone(), a0);
        let mut sa = KgStepper::new(p, &s, Exec::Sequential);
        let mut sb = KgStepper::new(p, &s, Exec::Parallel);
        for _ in 0..50 {
            sa.step(&mut a, 0.025).unwrap();
        }
        crate::par::on_threads(4, || {
            for _ in 0..50 {
                sb.step(&mut b, 0.025).unwrap();
            }
        });
        assert_eq!(a, b);
    }

    #[test]
    fn initial_data_f_zero() {
        let p = ModelParams::soliton_model(0.1, 0.0).unwrap();
        let s = QuadraticPhase::model();
        let grid = Grid::symmetric(300.0, 6000).unwrap();
        let t = -900.0;
        let st = kg_initialize(&p, &s, grid, t, 1.0).unwrap();
        let t2 = -9.0;
        for i in (0..grid.nx).step_by(97) {
            let x = grid.x(i);
            let want = 2.0 * 0.1 * 2f64.sqrt() * (t + t2 / 2.0).cos() / (0.1 * x).cosh();
            assert!((st.u[i] - want).abs() < 1e-14, "{x}");
            // V by central difference in t of the closed form
            let h = 1e-4;
            let uu = |tt: f64| 2.0 * 0.1 * 2f64.sqrt() * (tt + 0.01 * tt / 2.0).cos() / (0.1 * x).cosh();
            assert!((st.v[i] - (uu(t + h) - uu(t - h)) / (2.0 * h)).abs() < 1e-8);
        }
        for i in 1..grid.nx / 2 {
            let (a, b) = (st.u[grid.nx / 2 + i], st.u[grid.nx / 2 - i]);
            assert!((a - b).abs() < 1e-15, "{i}");
        }
        let peak = st.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(peak <= 2.0 * 2f64.sqrt() * 0.1 + 1e-15);
        let a = demodulate(&st, &p);
        assert!((a[grid.nx / 2].norm() - 0.1 * 2f64.sqrt()).abs() < 1e-3 * 0.1);
    }

    #[test]
    fn initial_data_with_driver_matches_v_derivative() {
        let p = ModelParams::soliton_model(0.1, 0.5).unwrap();
        let s = QuadraticPhase::model();
        let grid = Grid::symmetric(300.0, 600).unwrap();
        let h = 1e-3;
        let a = kg_initialize(&p, &s, grid, -900.0 - h, 1.0).unwrap();
        let b = kg_initialize(&p, &s, grid, -900.0 + h, 1.0).unwrap();
        let c = kg_initialize(&p, &s, grid, -900.0, 1.0).unwrap();
        for i in 0..grid.nx {
            assert!((c.v[i] - (b.u[i] - a.u[i]) / (2.0 * h)).abs() < 1e-7);
        }
        assert!(kg_initialize(&p, &s, grid, -200.0, 1.0).is_err());
        assert!(kg_initialize(&p, &s, Grid::symmetric(100.0, 600).unwrap(), -900.0, 1.0).is_err());
    }

    #[test]
    fn demodulation_examples() {
        let p = ModelParams::new(0.1, 0.0, 0.0, 0.7).unwrap();
        let grid = Grid::symmetric(10.0, 64).unwrap();
        let a = Complex64::new(0.3, -0.4);
        let t = 2.5;
        let mut st = FieldState::zeros(grid, t);
        for i in 0..grid.nx {
            let e = Complex64::from_polar(1.0, p.k * grid.x(i) + p.omega * t);
            st.u[i] = 2.0 * (a * e).re;
            st.v[i] = 2.0 * (a * Complex64::new(0.0, p.omega) * e).re;
        }
        for v in demodulate(&st, &p) {
            assert!((v - a).norm() < 1e-15);
        }
        // conjugate carrier: U built from conj(a) exp(-i(kx + wt)) gives the same real field,
        // so demodulating at (-k, -omega) would yield conj(A); here check the algebra directly.
        let z = demodulate_point(st.u[5], st.v[5], grid.x(5), t, &p);
        let zc = 0.5 * Complex64::new(st.u[5], st.v[5] / p.omega) * Complex64::from_polar(1.0, p.k * grid.x(5) + p.omega * t);
        assert!((z.conj() - zc).norm() < 1e-15);
    }

    #[test]
    fn slowly_varying_demodulation_error_is_order_eps() {
        let p = ModelParams::soliton_model(0.05, 0.0).unwrap();
        let grid = Grid::symmetric(10.0, 64).unwrap();
        let mut worst: f64 = 0.0;
        for j in 0..50 {
            let t = 3.0 * j as f64;
            let eps = p.epsilon;
            let a = Complex64::from_polar(1.0 + 0.5 * (eps * t).sin(), eps * t);
            let da = Complex64::from_polar(1.0, eps * t) * (0.5 * eps * (eps * t).cos())
                + a * Complex64::new(0.0, eps);
            let mut st = FieldState::zeros(grid, t);
            for i in 0..grid.nx {
                let e = Complex64::from_polar(1.0, t);
                st.u[i] = 2.0 * (a * e).re;
                st.v[i] = 2.0 * ((da + a * Complex64::new(0.0, 1.0)) * e).re;
            }
            worst = worst.max((demodulate(&st, &p)[0] - a).norm() / a.norm());
        }
        assert!(worst < 3.0 * p.epsilon && worst > 0.0, "{worst}");
    }
}
