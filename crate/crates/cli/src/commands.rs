//! One function per CLI verb. Each returns a [`Failure`] carrying the exit code.

use std::fs;
use std::path::{Path, PathBuf};

use paramres_core::envelope::{soliton, ComplexEnvelope, NlseStepper};
use paramres_core::experiment::{
    layer_scaling, match_crossing, numeric_pair, read_events, run_experiment, EnvelopeProfile, EventLine,
    JumpRecord,
};
use paramres_core::geometry::{find_resonances_omega2, ResonanceSearch};
use paramres_core::io::write_jsonl;
use paramres_core::layer::{arbitrate, check_run, layer_sweep};
use paramres_core::Error;
use serde_json::json;

use crate::config::{ConfigError, Settings};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_CONVERGENCE: u8 = 2;
pub const EXIT_MISSING_INPUT: u8 = 3;
pub const EXIT_SOLVER_ABORT: u8 = 4;

pub const CONFIG_FILE: &str = "config.conf";
pub const MATCH_FILE: &str = "match.jsonl";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(EXIT_CONFIG, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter { .. }
            | Error::Singularity { .. }
            | Error::CrossesResonance { .. }
            | Error::SigmaOutOfRange { .. }
            | Error::KappaTooSmall { .. } => EXIT_CONFIG,
            Error::Convergence { .. } => EXIT_CONVERGENCE,
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) => EXIT_MISSING_INPUT,
            Error::NonFinite { .. } | Error::StepSizeCollapse { .. } | Error::TooManySteps { .. } | Error::SolverAbort { .. } => {
                EXIT_SOLVER_ABORT
            }
        };
        let message = match e {
            Error::InvalidParameter { name, reason } => format!("config key `{name}`: {reason}"),
            other => other.to_string(),
        };
        Failure::new(code, message)
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_MISSING_INPUT, format!("{}: {e}", path.display()))
}

/// Creates `dir`, refusing a non-empty existing one unless `force`.
fn fresh_dir(dir: &Path, force: bool) -> Result<(), Failure> {
    let occupied = fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(false);
    if occupied && !force {
        return Err(Failure::new(
            EXIT_CONFIG,
            format!("output directory {} is not empty (use --force to overwrite)", dir.display()),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

pub fn resonances(settings: &Settings, out: &Path, force: bool) -> Result<(), Failure> {
    let params = settings.params()?;
    let phase = settings.phase()?;
    let e2 = params.epsilon * params.epsilon;
    let (t0, t1) = (settings.number("schedule.t_start")?, settings.number("schedule.t_end")?);
    let x = settings.number("probe.x")?;
    let events = if t1 > t0 {
        find_resonances_omega2((e2 * t0, e2 * t1), e2 * x, &phase, &params, &ResonanceSearch::default())?
    } else {
        Vec::new()
    };
    fresh_dir(out, force)?;
    let lines: Vec<EventLine> = events.iter().map(|e| EventLine::new(e, &params)).collect();
    write_jsonl(&out.join("resonances.jsonl"), &lines)?;
    println!("{:>8} {:>14} {:>14} {:>10} {:>8} {:>7}", "label", "t2", "t", "phi", "alpha", "simple");
    for l in &lines {
        println!(
            "{:>8} {:>14.10} {:>14.8} {:>10.6} {:>8.5} {:>7}",
            l.label.to_string(),
            l.t2_star,
            l.t_star,
            l.phi,
            l.alpha,
            l.is_simple
        );
    }
    Ok(())
}

pub fn layer(settings: &Settings, out: &Path, force: bool) -> Result<(), Failure> {
    let f_list = settings.list("layer.F")?;
    let (k, tol) = (settings.number("layer.K")?, settings.number("layer.tol")?);
    if f_list.is_empty() {
        return Err(ConfigError { key: "layer.F".into(), reason: "F list is empty".into() }.into());
    }
    for &big_f in &f_list {
        check_run(big_f, k, tol)?;
        if !(big_f > 0.0 && big_f <= 1.5) {
            return Err(ConfigError { key: "layer.F".into(), reason: format!("{big_f} outside (0, 1.5]") }.into());
        }
    }
    fresh_dir(out, force)?;
    let mut runs = Vec::new();
    let mut aborted = None;
    for (big_f, r) in f_list.iter().zip(layer_sweep(&f_list, k, tol, settings.exec()?)) {
        match r {
            Ok(n) => runs.push(n),
            Err(e) => {
                eprintln!("F = {big_f}: {e}");
                aborted.get_or_insert(e);
            }
        }
    }
    let report = arbitrate(&runs);
    write_jsonl(&out.join("layer.jsonl"), &report.records)?;
    fs::write(out.join("verdict.json"), serde_json::to_string_pretty(&report).map_err(Error::from)?)
        .map_err(|e| io_failure(out, e))?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "F", "|c1|", "e^(piF^2/2)", "arg c2", "matching", "theorem", "drift");
    for r in &report.records {
        println!(
            "{:>6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.2e}",
            r.F, r.abs_c1, r.abs_c1_expected, r.arg_c2, r.arg_matching, r.arg_theorem, r.drift
        );
    }
    println!(
        "verdict: {} (max deviation matching {:.4}, theorem {:.4}, tolerance {})",
        report.verdict.name(),
        report.max_dev_matching,
        report.max_dev_theorem,
        report.tolerance
    );
    if let Some(e) = aborted {
        return Err(e.into());
    }
    if let Some(r) = report.records.iter().find(|r| !r.converged) {
        return Err(Failure::new(
            EXIT_CONVERGENCE,
            format!("F = {}: drift {:.3e} between K = {} and {} exceeds the limit", r.F, r.drift, r.K, 2.0 * r.K),
        ));
    }
    Ok(())
}

pub fn nlse(settings: &Settings, out: &Path, force: bool) -> Result<(), Failure> {
    let params = settings.params()?;
    let n = settings.count("nlse.n")?;
    let extent = settings.number("nlse.zeta_extent")?;
    let dt2 = settings.number("nlse.dt2")?;
    let (t2_start, t2_end) = (settings.number("nlse.t2_start")?, settings.number("nlse.t2_end")?);
    let (eta, kappa) = (settings.number("nlse.eta")?, settings.number("nlse.kappa")?);
    let every = settings.number("nlse.snapshot_every")?;
    if !(t2_end > t2_start) {
        return Err(ConfigError { key: "nlse.t2_end".into(), reason: "must exceed nlse.t2_start".into() }.into());
    }
    if !(every >= 0.0) {
        return Err(ConfigError { key: "nlse.snapshot_every".into(), reason: "must be >= 0".into() }.into());
    }
    if !(dt2 > 0.0) {
        return Err(ConfigError { key: "nlse.dt2".into(), reason: "must be positive".into() }.into());
    }
    let mut env = ComplexEnvelope::from_fn(-extent, 2.0 * extent, n, t2_start, |z| soliton(eta, kappa, z, t2_start))?;
    fresh_dir(out, force)?;
    let mut stepper = NlseStepper::for_envelope(&env, &params);
    let mut index = 0;
    let mut steps = 0;
    env.write_csv(&out.join(format!("nlse-{index}.csv")), Some(&params))?;
    if every > 0.0 {
        let mut next = t2_start + every;
        while next < t2_end - 1e-12 {
            steps += stepper.advance_to(&mut env, next, dt2)?;
            index += 1;
            env.write_csv(&out.join(format!("nlse-{index}.csv")), Some(&params))?;
            next += every;
        }
    }
    steps += stepper.advance_to(&mut env, t2_end, dt2)?;
    index += 1;
    env.write_csv(&out.join(format!("nlse-{index}.csv")), Some(&params))?;
    env.write_csv(&out.join("nlse-final.csv"), Some(&params))?;

    let mass_drift = (env.mass() - env.initial_mass()).abs() / env.initial_mass();
    // The closed form is the soliton of the model coefficients only.
    let soliton_linf = ((params.gamma + 1.0 / 3.0).abs() < 1e-12 && params.k == 0.0).then(|| {
        (0..env.len())
            .map(|i| (env.values[i] - soliton(eta, kappa, env.zeta(i), t2_end)).norm())
            .fold(0.0, f64::max)
    });
    let summary = json!({
        "t2_start": t2_start,
        "t2_end": t2_end,
        "steps": steps,
        "snapshots": index + 1,
        "mass_drift": mass_drift,
        "soliton_linf": soliton_linf,
    });
    fs::write(out.join("nlse.json"), serde_json::to_string_pretty(&summary).map_err(Error::from)?)
        .map_err(|e| io_failure(out, e))?;
    println!("t2 = {t2_end}: {steps} steps, {} snapshots, mass drift {mass_drift:.3e}", index + 1);
    if let Some(d) = soliton_linf {
        println!("max |Psi - soliton| = {d:.3e}");
    }
    Ok(())
}

pub fn run_dir(settings: &Settings, out: &Path) -> Result<PathBuf, Failure> {
    Ok(out.join(format!("run-{}", settings.tag()?)))
}

pub fn kg(settings: &Settings, out: &Path, force: bool) -> Result<(), Failure> {
    let cfg = settings.experiment()?;
    cfg.validate()?;
    let dir = run_dir(settings, out)?;
    if dir.exists() {
        if !force {
            return Err(Failure::new(
                EXIT_CONFIG,
                format!("run directory {} exists (use --force to replace it)", dir.display()),
            ));
        }
        fs::remove_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    }
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    fs::write(dir.join(CONFIG_FILE), settings.to_text()).map_err(|e| io_failure(&dir, e))?;
    let rec = run_experiment(&cfg, Some(&dir))?;
    let s = &rec.summary;
    println!("{}: {} steps, {} snapshots, {} events", dir.display(), s.steps, s.snapshots, rec.events.len());
    if let Some(d) = s.tracking_max_dev {
        println!("pre-resonance tracking: max relative deviation {d:.4}");
    }
    println!("boundary energy ratio: max {:.3e}", s.boundary_ratio_max);
    if let Some(r) = &s.reduction {
        println!("reduction t2 {:.3} -> {:.3}: L-inf relative {:.4}", r.t2_from, r.t2_to, r.linf_rel);
    }
    print_jumps(&s.jumps);
    Ok(())
}

fn print_jumps(jumps: &[JumpRecord]) {
    if jumps.is_empty() {
        return;
    }
    println!("{:>8} {:>10} {:>8} {:>10} {:>10} {:>10}", "label", "t*", "F", "measured", "predicted", "rel.err");
    for j in jumps {
        println!(
            "{:>8} {:>10.3} {:>8.5} {:>10.5} {:>10.5} {:>10.4}",
            j.label, j.t_star, j.big_f, j.measured_ratio, j.predicted_ratio, j.rel_error
        );
    }
}

pub fn match_run(settings: &Settings, run: &Path, overrides: &[String], force: bool) -> Result<(), Failure> {
    if !run.is_dir() {
        return Err(Failure::new(EXIT_MISSING_INPUT, format!("run directory {} not found", run.display())));
    }
    let conf = run.join(CONFIG_FILE);
    let settings = if conf.is_file() {
        let mut s = Settings::load(&conf)?;
        for a in overrides {
            s.assign(a)?;
        }
        s
    } else {
        settings.clone()
    };
    let target = run.join(MATCH_FILE);
    if target.exists() && !force {
        return Err(Failure::new(
            EXIT_CONFIG,
            format!("{} exists (use --force to overwrite)", target.display()),
        ));
    }
    let cfg = settings.experiment()?;
    let events = read_events(run)?;
    let mut records = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let (pre, post) = (run.join(format!("jump-{i}-pre.csv")), run.join(format!("jump-{i}-post.csv")));
        if !pre.is_file() || !post.is_file() {
            continue;
        }
        let (pre, post) = (EnvelopeProfile::read_csv(&pre)?, EnvelopeProfile::read_csv(&post)?);
        let scaling = layer_scaling(ev, &cfg.params, &cfg.phase, cfg.x_probe);
        let pair = numeric_pair(scaling.big_f, &cfg.jump)?;
        records.push(match_crossing(ev, &pre, &post, &cfg.params, &cfg.phase, &cfg.jump, &pair, cfg.x_probe)?);
    }
    write_jsonl(&target, &records)?;
    print_jumps(&records);
    if records.is_empty() {
        println!("no measured crossings in {}", run.display());
    }
    Ok(())
}
