//! Flat `key = value` configuration with typed accessors.
//!
//! Every key has a default; files and `--set` overrides may only assign known
//! keys. `#` starts a comment. Numbers accept a `p/q` fraction form.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use paramres_core::experiment::{ExperimentConfig, JumpConfig};
use paramres_core::par::Exec;
use paramres_core::{ModelParams, PhaseChoice, PolynomialPhase, QuadraticPhase};

/// Known keys with their defaults (the soliton model at eps = 0.1).
const KEYS: &[(&str, &str)] = &[
    ("epsilon", "0.1"),
    ("f", "0.5"),
    ("gamma", "-1/3"),
    ("k", "0"),
    ("phase", "quadratic"),
    ("phase.a", "1"),
    ("phase.t_coeffs", ""),
    ("phase.x_coeffs", ""),
    ("grid.x_extent", "400"),
    ("grid.nx", "8000"),
    ("grid.dt", "0.025"),
    ("schedule.t_start", "-900"),
    ("schedule.t_end", "300"),
    ("schedule.snapshot_every", "25"),
    ("schedule.probe_every", "4"),
    ("output.x_stride", "10"),
    ("probe.x", "0"),
    ("init.eta", "1"),
    ("monitor.boundary_width", "5"),
    ("layer.F", "0.25,0.5,1.0"),
    ("layer.K", "200"),
    ("layer.tol", "1e-10"),
    ("nlse.n", "1024"),
    ("nlse.zeta_extent", "40"),
    ("nlse.dt2", "1e-3"),
    ("nlse.t2_start", "0"),
    ("nlse.t2_end", "5"),
    ("nlse.eta", "1"),
    ("nlse.kappa", "0"),
    ("nlse.snapshot_every", "1"),
    ("jump.delta", "0.5"),
    ("jump.window", "10"),
    ("jump.nlse_n", "1024"),
    ("jump.nlse_dt2", "1e-3"),
    ("reduction.span", "0"),
    ("run.tag", "crossing"),
    ("run.parallel", "true"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    fn new(key: &str, reason: impl Into<String>) -> Self {
        ConfigError { key: key.to_string(), reason: reason.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn parse_number(key: &str, raw: &str) -> Result<f64, ConfigError> {
    let bad = || ConfigError::new(key, format!("`{raw}` is not a number"));
    let v = match raw.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => raw.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("`{raw}` is not finite")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { values: KEYS.iter().map(|&(k, v)| (k, v.to_string())).collect() }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let known = KEYS
            .iter()
            .map(|&(k, _)| k)
            .find(|&k| k == key)
            .ok_or_else(|| ConfigError::new(key, "unknown key"))?;
        self.values.insert(known, value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` assignment as given on the command line.
    pub fn assign(&mut self, assignment: &str) -> Result<(), ConfigError> {
        match assignment.split_once('=') {
            Some((k, v)) => self.set(k.trim(), v),
            None => Err(ConfigError::new(assignment.trim(), "expected key=value")),
        }
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(line, format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        let mut s = Settings::default();
        s.apply_text(&text)?;
        Ok(s)
    }

    /// Every key with its current value, one per line.
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|&(k, _)| format!("{k} = {}\n", self.values[k])).collect()
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared key {key}"))
    }

    pub fn number(&self, key: &str) -> Result<f64, ConfigError> {
        parse_number(key, self.raw(key))
    }

    pub fn count(&self, key: &str) -> Result<usize, ConfigError> {
        self.raw(key)
            .parse()
            .map_err(|_| ConfigError::new(key, format!("`{}` is not a non-negative integer", self.raw(key))))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_number(key, s))
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(ConfigError::new(key, format!("`{other}` is not a boolean"))),
        }
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let p = ModelParams::new(self.number("epsilon")?, self.number("f")?, self.number("gamma")?, self.number("k")?);
        p.map_err(|e| match e {
            paramres_core::Error::InvalidParameter { name, reason } => ConfigError::new(name, reason),
            other => ConfigError::new("epsilon", other.to_string()),
        })
    }

    pub fn phase(&self) -> Result<PhaseChoice, ConfigError> {
        match self.raw("phase") {
            "quadratic" => {
                let a = self.number("phase.a")?;
                if a == 0.0 {
                    return Err(ConfigError::new("phase.a", "must be nonzero"));
                }
                Ok(PhaseChoice::Quadratic(QuadraticPhase { a }))
            }
            "poly" => {
                let t_coeffs = self.list("phase.t_coeffs")?;
                if t_coeffs.len() < 3 {
                    return Err(ConfigError::new("phase.t_coeffs", "need at least a quadratic in t2"));
                }
                Ok(PhaseChoice::Polynomial(PolynomialPhase { t_coeffs, x_coeffs: self.list("phase.x_coeffs")? }))
            }
            other => Err(ConfigError::new("phase", format!("`{other}` is neither `quadratic` nor `poly`"))),
        }
    }

    pub fn exec(&self) -> Result<Exec, ConfigError> {
        Ok(if self.flag("run.parallel")? { Exec::Parallel } else { Exec::Sequential })
    }

    pub fn tag(&self) -> Result<String, ConfigError> {
        let tag = self.raw("run.tag");
        if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.') {
            return Err(ConfigError::new("run.tag", "use letters, digits, `-`, `_` or `.`"));
        }
        Ok(tag.to_string())
    }

    pub fn jump(&self) -> Result<JumpConfig, ConfigError> {
        Ok(JumpConfig {
            delta: self.number("jump.delta")?,
            nlse_n: self.count("jump.nlse_n")?,
            nlse_dt2: self.number("jump.nlse_dt2")?,
            layer_k: self.number("layer.K")?,
            layer_tol: self.number("layer.tol")?,
        })
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        Ok(ExperimentConfig {
            params: self.params()?,
            phase: self.phase()?,
            x_extent: self.number("grid.x_extent")?,
            nx: self.count("grid.nx")?,
            dt: self.number("grid.dt")?,
            t_start: self.number("schedule.t_start")?,
            t_end: self.number("schedule.t_end")?,
            eta: self.number("init.eta")?,
            snapshot_every: self.number("schedule.snapshot_every")?,
            probe_every: self.count("schedule.probe_every")?,
            x_stride: self.count("output.x_stride")?,
            x_probe: self.number("probe.x")?,
            window: self.number("jump.window")?,
            jump: self.jump()?,
            reduction_span: self.number("reduction.span")?,
            track_until: None,
            boundary_width: self.count("monitor.boundary_width")?,
            exec: self.exec()?,
            tag: self.tag()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_a_valid_experiment() {
        let cfg = Settings::default().experiment().unwrap();
        cfg.validate().unwrap();
        assert!((cfg.params.gamma + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut s = Settings::default();
        let err = s.apply_text("epsilon = 0.05\nlayer.k = 3\n").unwrap_err();
        assert_eq!(err.key, "layer.k");
        assert_eq!(s.raw("epsilon"), "0.05");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let mut s = Settings::default();
        s.apply_text("# header\n\n  f = 2   # strong drive\n").unwrap();
        assert_eq!(s.number("f").unwrap(), 2.0);
    }

    #[test]
    fn malformed_values_name_their_key() {
        let mut s = Settings::default();
        s.set("grid.nx", "many").unwrap();
        assert_eq!(s.experiment().unwrap_err().key, "grid.nx");
        assert_eq!(Settings::default().apply_text("no equals sign").unwrap_err().reason, "line 1: expected key = value");
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut s = Settings::default();
        s.assign("layer.F=0.3, 0.6").unwrap();
        let mut t = Settings::default();
        t.apply_text(&s.to_text()).unwrap();
        assert_eq!(s, t);
        assert_eq!(t.list("layer.F").unwrap(), vec![0.3, 0.6]);
    }

    #[test]
    fn polynomial_phase_selection() {
        let mut s = Settings::default();
        s.set("phase", "poly").unwrap();
        assert_eq!(s.phase().unwrap_err().key, "phase.t_coeffs");
        s.set("phase.t_coeffs", "0, 0, 0.5").unwrap();
        assert!(matches!(s.phase().unwrap(), PhaseChoice::Polynomial(_)));
        s.set("phase", "cubic").unwrap();
        assert_eq!(s.phase().unwrap_err().key, "phase");
    }
}
