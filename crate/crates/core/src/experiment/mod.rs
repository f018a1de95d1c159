//! End-to-end crossing experiment: direct Klein-Gordon run from soliton
//! initial data, envelope measurement around every simple crossing, and the
//! comparison with the NLSE + connection-formula prediction.

mod jump;
mod output;

pub use jump::{
    from_layer, g_phase_coefficient, jump_beta, layer_scaling, match_crossing, numeric_pair,
    predict_post_envelope, reduction_check, to_layer, EnvelopeProfile, JumpConfig, JumpRecord,
    LayerScaling, ReductionRecord,
};
pub use output::{
    read_events, EventLine, RunWriter, ENVELOPE_PROBE_FILE, EVENTS_FILE, JUMPS_FILE, PROBE_FILE, SUMMARY_FILE,
};

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{find_resonances_omega2, ResonanceEvent, ResonanceSearch};
use crate::kg::{boundary_energy_ratio, check_dt, demodulate, demodulate_point, kg_initialize, Grid, KgStepper};
use crate::par::Exec;
use crate::params::ModelParams;
use crate::phase::PhaseChoice;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub phase: PhaseChoice,
    /// Grid covers `[-x_extent, x_extent)`.
    pub x_extent: f64,
    pub nx: usize,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Soliton amplitude of the initial envelope.
    pub eta: f64,
    /// Fast time between snapshots; `0` disables them.
    pub snapshot_every: f64,
    /// Steps between probe samples.
    pub probe_every: usize,
    /// Grid stride of written snapshots.
    pub x_stride: usize,
    pub x_probe: f64,
    /// Half-width (fast time) of the Hann window used to average the demodulated envelope.
    pub window: f64,
    pub jump: JumpConfig,
    /// `t2` span of the KG-vs-NLSE comparison starting right after `t_start`; `0` disables it.
    pub reduction_span: f64,
    /// Pre-resonance tracking of `|A(x_probe, t)|` ends here (fast time); default is one unit of
    /// `t2` before the first crossing.
    pub track_until: Option<f64>,
    pub boundary_width: usize,
    pub exec: Exec,
    pub tag: String,
}

impl ExperimentConfig {
    /// The soliton model: `gamma = -1/3`, `S = t2^2 / 2`, `k = 0`, soliton `eta = 1`, crossings at `t = -200, 0, 200` for `eps = 0.1`.
    pub fn soliton_model(epsilon: f64, f: f64) -> Result<Self> {
        Ok(ExperimentConfig {
            params: ModelParams::soliton_model(epsilon, f)?,
            phase: PhaseChoice::default(),
            x_extent: 40.0 / epsilon,
            nx: (80.0 / (epsilon * 0.1)).round() as usize,
            dt: 0.025,
            t_start: -9.0 / (epsilon * epsilon),
            t_end: 3.0 / (epsilon * epsilon),
            eta: 1.0,
            snapshot_every: 25.0,
            probe_every: 4,
            x_stride: 10,
            x_probe: 0.0,
            window: 10.0,
            jump: JumpConfig::default(),
            reduction_span: 0.0,
            track_until: None,
            boundary_width: 5,
            exec: Exec::default(),
            tag: "crossing".into(),
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::symmetric(self.x_extent, self.nx)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let grid = self.grid()?;
        check_dt(self.dt, &grid)?;
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::invalid("schedule.t_end", "must exceed schedule.t_start"));
        }
        let period = 2.0 * PI / self.params.omega;
        if self.probe_every == 0 || self.probe_every as f64 * self.dt > period / 20.0 {
            return Err(Error::invalid(
                "schedule.probe_every",
                "probe cadence must give at least 20 samples per carrier period",
            ));
        }
        if !(self.snapshot_every >= 0.0) {
            return Err(Error::invalid("schedule.snapshot_every", "must be >= 0"));
        }
        if self.x_stride == 0 {
            return Err(Error::invalid("output.x_stride", "must be >= 1"));
        }
        if !(self.window > 0.0) {
            return Err(Error::invalid("jump.window", "must be positive"));
        }
        if !(self.jump.delta > 0.0) {
            return Err(Error::invalid("jump.delta", "must be positive"));
        }
        if !(self.reduction_span >= 0.0) {
            return Err(Error::invalid("reduction.span", "must be >= 0"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::invalid("init.eta", "must be positive"));
        }
        if self.x_probe < grid.x_min || self.x_probe >= grid.x_max() {
            return Err(Error::invalid("probe.x", "outside the grid"));
        }
        Ok(())
    }
}

/// `|A(x_probe, t)|` against the modulus of the initial asymptotic envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub abs_a: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tag: String,
    pub epsilon: f64,
    pub f: f64,
    pub gamma: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub tracking_max_dev: Option<f64>,
    pub boundary_ratio_max: f64,
    pub reduction: Option<ReductionRecord>,
    pub jumps: Vec<JumpRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Snapshot fast times.
    pub times: Vec<f64>,
    /// Demodulated envelopes at the snapshots (every `x_stride`-th grid point).
    pub envelope_series: Vec<Vec<Complex64>>,
    /// `(t, U(x_probe, t))`.
    pub probe_series: Vec<(f64, f64)>,
    /// `(t, A(x_probe, t))`.
    pub envelope_probe: Vec<(f64, Complex64)>,
    pub tracking: Vec<TrackPoint>,
    pub events: Vec<ResonanceEvent>,
    /// Averaged profiles `(pre, post)` per simple crossing, in event order.
    pub profiles: Vec<(usize, EnvelopeProfile, EnvelopeProfile)>,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Pre(usize),
    Post(usize),
    ReductionFrom,
    ReductionTo,
}

struct Accumulator {
    slot: Slot,
    center: f64,
    sum: Vec<Complex64>,
    weight: f64,
}

impl Accumulator {
    fn new(slot: Slot, center: f64, n: usize) -> Self {
        Accumulator { slot, center, sum: vec![Complex64::new(0.0, 0.0); n], weight: 0.0 }
    }

    fn profile(&self, grid: &Grid, half_width: f64) -> EnvelopeProfile {
        EnvelopeProfile {
            t: self.center,
            half_width,
            x_min: grid.x_min,
            dx: grid.dx,
            values: self.sum.iter().map(|v| v / self.weight).collect(),
        }
    }
}

/// Resonances crossed by the probe between `t_start` and `t_end`.
pub fn probe_events(cfg: &ExperimentConfig) -> Result<Vec<ResonanceEvent>> {
    let e2 = cfg.params.epsilon * cfg.params.epsilon;
    find_resonances_omega2(
        (e2 * cfg.t_start, e2 * cfg.t_end),
        e2 * cfg.x_probe,
        &cfg.phase,
        &cfg.params,
        &ResonanceSearch::default(),
    )
}

/// Runs the experiment, streaming artifacts into `out` when given.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunRecord> {
    cfg.validate()?;
    let params = cfg.params;
    let eps = params.epsilon;
    let e2 = eps * eps;
    let grid = cfg.grid()?;
    let events = probe_events(cfg)?;
    let probe = grid.index_of(cfg.x_probe);
    let w = cfg.window;

    let mut writer = match out {
        Some(dir) => Some(RunWriter::create(dir, cfg)?),
        None => None,
    };
    if let Some(wr) = writer.as_mut() {
        wr.write_events(&events, &params)?;
    }

    // Averaging windows that fit inside the run.
    let slack = 0.5 * cfg.dt;
    let fits = |c: f64| c - w >= cfg.t_start - slack && c + w <= cfg.t_end + slack;
    let mut accs: Vec<Accumulator> = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        if !ev.is_simple {
            continue;
        }
        let (pre, post) = ((ev.t2_star - cfg.jump.delta) / e2, (ev.t2_star + cfg.jump.delta) / e2);
        if fits(pre) && fits(post) {
            accs.push(Accumulator::new(Slot::Pre(i), pre, grid.nx));
            accs.push(Accumulator::new(Slot::Post(i), post, grid.nx));
        }
    }
    if cfg.reduction_span > 0.0 {
        let from = cfg.t_start + w;
        let to = from + cfg.reduction_span / e2;
        if fits(to) {
            accs.push(Accumulator::new(Slot::ReductionFrom, from, grid.nx));
            accs.push(Accumulator::new(Slot::ReductionTo, to, grid.nx));
        }
    }

    let track_until = cfg
        .track_until
        .unwrap_or_else(|| events.first().map(|e| (e.t2_star - 1.0) / e2).unwrap_or(cfg.t_end));
    let zeta_probe0 = eps * (params.omega * cfg.x_probe + params.k * cfg.t_start);
    let tracked_modulus = eps * 2f64.sqrt() * cfg.eta / (cfg.eta * zeta_probe0).cosh();

    let mut state = kg_initialize(&params, &cfg.phase, grid, cfg.t_start, cfg.eta)?;
    let mut stepper = KgStepper::new(params, &cfg.phase, cfg.exec);
    let steps = ((cfg.t_end - cfg.t_start) / cfg.dt).round() as usize;

    let mut rec = RunRecord {
        times: Vec::new(),
        envelope_series: Vec::new(),
        probe_series: Vec::new(),
        envelope_probe: Vec::new(),
        tracking: Vec::new(),
        events: events.clone(),
        profiles: Vec::new(),
        summary: RunSummary {
            tag: cfg.tag.clone(),
            epsilon: eps,
            f: params.f,
            gamma: params.gamma,
            t_start: cfg.t_start,
            t_end: cfg.t_end,
            steps,
            snapshots: 0,
            tracking_max_dev: None,
            boundary_ratio_max: 0.0,
            reduction: None,
            jumps: Vec::new(),
        },
    };
    let mut next_snapshot = cfg.t_start;
    let mut last_snapshot: Option<usize> = None;
    let mut demod = vec![Complex64::new(0.0, 0.0); grid.nx];

    for step in 0..=steps {
        if step > 0 {
            if let Err(e) = stepper.step(&mut state, cfg.dt) {
                if let Some(wr) = writer.as_mut() {
                    wr.flush()?;
                }
                return Err(Error::SolverAbort { time: state.t, last_snapshot, reason: e.to_string() });
            }
        }
        let t = state.t;
        if step % cfg.probe_every == 0 {
            let u = state.u[probe];
            let a = demodulate_point(u, state.v[probe], grid.x(probe), t, &params);
            rec.probe_series.push((t, u));
            rec.envelope_probe.push((t, a));
            if t <= track_until {
                rec.tracking.push(TrackPoint { t, abs_a: a.norm(), predicted: tracked_modulus });
            }
            if let Some(wr) = writer.as_mut() {
                wr.probe(t, u, a)?;
            }
        }
        if step % 400 == 0 {
            let r = boundary_energy_ratio(&state, params.gamma, cfg.boundary_width);
            rec.summary.boundary_ratio_max = rec.summary.boundary_ratio_max.max(r);
        }
        let snap_due = cfg.snapshot_every > 0.0 && t >= next_snapshot - 0.5 * cfg.dt;
        let active: Vec<usize> = (0..accs.len()).filter(|&j| (t - accs[j].center).abs() <= w).collect();
        if snap_due || !active.is_empty() {
            demod = demodulate(&state, &params);
        }
        for j in active {
            let tau = (t - accs[j].center) / w;
            let weight = (0.5 * PI * tau).cos().powi(2);
            let acc = &mut accs[j];
            for (s, a) in acc.sum.iter_mut().zip(&demod) {
                *s += weight * a;
            }
            acc.weight += weight;
        }
        if snap_due {
            let index = rec.times.len();
            rec.times.push(t);
            rec.envelope_series.push(demod.iter().step_by(cfg.x_stride).copied().collect());
            if let Some(wr) = writer.as_mut() {
                wr.snapshot(index, &state, &demod, &params, cfg.x_stride)?;
            }
            last_snapshot = Some(index);
            next_snapshot += cfg.snapshot_every;
            let r = boundary_energy_ratio(&state, params.gamma, cfg.boundary_width);
            rec.summary.boundary_ratio_max = rec.summary.boundary_ratio_max.max(r);
        }
    }
    rec.summary.snapshots = rec.times.len();
    rec.summary.tracking_max_dev = rec
        .tracking
        .iter()
        .map(|p| (p.abs_a - p.predicted).abs() / p.predicted)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));

    let profile_of = |slot: Slot| accs.iter().find(|a| a.slot == slot && a.weight > 0.0).map(|a| a.profile(&grid, w));
    for (i, ev) in events.iter().enumerate() {
        if let (Some(pre), Some(post)) = (profile_of(Slot::Pre(i)), profile_of(Slot::Post(i))) {
            let sc = layer_scaling(ev, &params, &cfg.phase, cfg.x_probe);
            let pair = numeric_pair(sc.big_f, &cfg.jump)?;
            let jr = match_crossing(ev, &pre, &post, &params, &cfg.phase, &cfg.jump, &pair, cfg.x_probe)?;
            if let Some(wr) = writer.as_mut() {
                wr.profiles(i, &pre, &post)?;
            }
            rec.summary.jumps.push(jr);
            rec.profiles.push((i, pre, post));
        }
    }
    if let (Some(from), Some(to)) = (profile_of(Slot::ReductionFrom), profile_of(Slot::ReductionTo)) {
        rec.summary.reduction = Some(reduction_check(&from, &to, &params, &cfg.phase, &cfg.jump, cfg.x_probe)?);
        if let Some(wr) = writer.as_mut() {
            wr.reduction_profiles(&from, &to)?;
        }
    }
    if let Some(wr) = writer.take() {
        wr.finish(&rec.summary)?;
    }
    Ok(rec)
}
