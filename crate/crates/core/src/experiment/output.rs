//! Run-directory layout: `snap-<index>.csv`, `probe.csv`, `envelope_probe.csv`,
//! `events.jsonl`, `jumps.jsonl`, `jump-<i>-pre.csv`/`jump-<i>-post.csv`,
//! `reduction-from.csv`/`reduction-to.csv` and `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EnvelopeProfile, ExperimentConfig, RunSummary};
use crate::error::Result;
use crate::geometry::{PhaseLabel, ResonanceEvent};
use crate::io::{read_jsonl, write_jsonl, CsvStream, CsvTable};
use crate::kg::FieldState;
use crate::params::ModelParams;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const JUMPS_FILE: &str = "jumps.jsonl";
pub const PROBE_FILE: &str = "probe.csv";
pub const ENVELOPE_PROBE_FILE: &str = "envelope_probe.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// One line of `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLine {
    pub label: PhaseLabel,
    pub t2_star: f64,
    pub t_star: f64,
    pub x2: f64,
    pub phi: f64,
    pub alpha: f64,
    pub is_simple: bool,
    pub l_residual: f64,
}

impl EventLine {
    pub fn new(ev: &ResonanceEvent, params: &ModelParams) -> Self {
        EventLine {
            label: ev.label,
            t2_star: ev.t2_star,
            t_star: ev.t_fast(params),
            x2: ev.x2,
            phi: ev.phi,
            alpha: ev.alpha,
            is_simple: ev.is_simple,
            l_residual: ev.l_residual,
        }
    }

    pub fn event(&self) -> ResonanceEvent {
        ResonanceEvent {
            t2_star: self.t2_star,
            x2: self.x2,
            label: self.label,
            phi: self.phi,
            alpha: self.alpha,
            is_simple: self.is_simple,
            l_residual: self.l_residual,
        }
    }
}

pub fn read_events(dir: &Path) -> Result<Vec<ResonanceEvent>> {
    Ok(read_jsonl::<EventLine>(&dir.join(EVENTS_FILE))?.iter().map(EventLine::event).collect())
}

fn params_meta(params: &ModelParams) -> Vec<(String, String)> {
    vec![
        ("epsilon".into(), params.epsilon.to_string()),
        ("f".into(), params.f.to_string()),
        ("gamma".into(), params.gamma.to_string()),
        ("k".into(), params.k.to_string()),
        ("omega".into(), params.omega.to_string()),
    ]
}

/// Streams the artifacts of one run into its directory.
pub struct RunWriter {
    dir: PathBuf,
    probe: CsvStream,
    envelope_probe: CsvStream,
}

impl RunWriter {
    pub fn create(dir: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut meta = params_meta(&cfg.params);
        meta.push(("tag".into(), cfg.tag.clone()));
        meta.push(("x_probe".into(), cfg.x_probe.to_string()));
        let probe = CsvStream::create(&dir.join(PROBE_FILE), &meta, &["t", "u"])?;
        let envelope_probe = CsvStream::create(&dir.join(ENVELOPE_PROBE_FILE), &meta, &["t", "re_a", "im_a"])?;
        Ok(RunWriter { dir: dir.to_path_buf(), probe, envelope_probe })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_events(&mut self, events: &[ResonanceEvent], params: &ModelParams) -> Result<()> {
        let lines: Vec<EventLine> = events.iter().map(|e| EventLine::new(e, params)).collect();
        write_jsonl(&self.dir.join(EVENTS_FILE), &lines)
    }

    pub fn probe(&mut self, t: f64, u: f64, a: Complex64) -> Result<()> {
        self.probe.row(&[t, u])?;
        self.envelope_probe.row(&[t, a.re, a.im])
    }

    pub fn snapshot(
        &mut self,
        index: usize,
        state: &FieldState,
        demod: &[Complex64],
        params: &ModelParams,
        stride: usize,
    ) -> Result<()> {
        let mut table = CsvTable::new(&["x", "u", "v", "re_a", "im_a"])
            .with_meta("t", state.t)
            .with_meta("t2", params.epsilon * params.epsilon * state.t)
            .with_meta("index", index);
        for (k, v) in params_meta(params) {
            table = table.with_meta(&k, v);
        }
        for i in (0..state.grid.nx).step_by(stride) {
            table.rows.push(vec![state.grid.x(i), state.u[i], state.v[i], demod[i].re, demod[i].im]);
        }
        table.write(&self.dir.join(format!("snap-{index}.csv")))?;
        self.flush()
    }

    pub fn profiles(&mut self, event_index: usize, pre: &EnvelopeProfile, post: &EnvelopeProfile) -> Result<()> {
        pre.write_csv(&self.dir.join(format!("jump-{event_index}-pre.csv")))?;
        post.write_csv(&self.dir.join(format!("jump-{event_index}-post.csv")))
    }

    pub fn reduction_profiles(&mut self, from: &EnvelopeProfile, to: &EnvelopeProfile) -> Result<()> {
        from.write_csv(&self.dir.join("reduction-from.csv"))?;
        to.write_csv(&self.dir.join("reduction-to.csv"))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.probe.flush()?;
        self.envelope_probe.flush()
    }

    pub fn finish(mut self, summary: &RunSummary) -> Result<()> {
        self.flush()?;
        write_jsonl(&self.dir.join(JUMPS_FILE), &summary.jumps)?;
        fs::write(self.dir.join(SUMMARY_FILE), serde_json::to_string_pretty(summary)?)?;
        Ok(())
    }
}
