use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DISPERSION_TOL: f64 = 1e-12;

/// Positive branch of the Klein-Gordon dispersion relation `omega^2 = k^2 + 1`.
pub fn dispersion(k: f64) -> f64 {
    (k * k + 1.0).sqrt()
}

/// Physical configuration of the driven equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    /// Driver strength.
    pub f: f64,
    /// Cubic coefficient.
    pub gamma: f64,
    pub k: f64,
    pub omega: f64,
}

impl ModelParams {
    /// Builds a configuration on the positive dispersion branch.
    pub fn new(epsilon: f64, f: f64, gamma: f64, k: f64) -> Result<Self> {
        let p = ModelParams {
            epsilon,
            f,
            gamma,
            k,
            omega: dispersion(k),
        };
        p.validate()?;
        Ok(p)
    }

    /// The configuration of the soliton experiment: `gamma = -1/3`, `k = 0`.
    pub fn soliton_model(epsilon: f64, f: f64) -> Result<Self> {
        Self::new(epsilon, f, -1.0 / 3.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("{} not in (0, 1)", self.epsilon)));
        }
        for (name, v) in [("f", self.f), ("gamma", self.gamma), ("k", self.k), ("omega", self.omega)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "not finite"));
            }
        }
        let residual = self.omega * self.omega - self.k * self.k - 1.0;
        if residual.abs() > DISPERSION_TOL {
            return Err(Error::invalid(
                "omega",
                format!("omega^2 - k^2 - 1 = {residual:e} violates the dispersion relation"),
            ));
        }
        Ok(())
    }

    pub fn with_f(mut self, f: f64) -> Self {
        self.f = f;
        self
    }
}
