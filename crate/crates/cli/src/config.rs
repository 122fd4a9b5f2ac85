//! Experiment configuration, read from JSON.
//!
//! Every field is optional; missing fields take the defaults below.
//!
//! ```json
//! {
//!   "dims": { "m": 8, "k": 2, "t": 16 },
//!   "eta_grid_db": [-10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20],
//!   "trials": 1000,
//!   "master_seed": 1,
//!   "beta_policy": "minimum",
//!   "noise": { "n0": 1.0, "ntilde0": 1.0 },
//!   "fairness_scale": 1.0,
//!   "output": null
//! }
//! ```
//!
//! `beta_policy` is either `"minimum"` (β = λ0,max per realization) or
//! `{ "fixed": <value> }`.

use std::path::{Path, PathBuf};

use rrtx::Dimensions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimsConfig {
    pub m: usize,
    pub k: usize,
    pub t: usize,
}

impl Default for DimsConfig {
    fn default() -> Self {
        DimsConfig { m: 8, k: 2, t: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaPolicy {
    #[default]
    Minimum,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub n0: f64,
    pub ntilde0: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { n0: 1.0, ntilde0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: DimsConfig,
    pub eta_grid_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub beta_policy: BetaPolicy,
    pub noise: NoiseConfig,
    pub fairness_scale: f64,
    pub output: Option<PathBuf>,
}

/// −10 dB to 20 dB in 2 dB steps.
pub fn default_eta_grid_db() -> Vec<f64> {
    (0..=15).map(|i| -10.0 + 2.0 * f64::from(i)).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dims: DimsConfig::default(),
            eta_grid_db: default_eta_grid_db(),
            trials: 1000,
            master_seed: 1,
            beta_policy: BetaPolicy::Minimum,
            noise: NoiseConfig::default(),
            fairness_scale: 1.0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks field ranges. The rank condition M ≥ 2K is not checked here:
    /// `verify` accepts configurations that violate it.
    pub fn validate(&self) -> Result<(), CliError> {
        self.dimensions()?;
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if self.eta_grid_db.is_empty() {
            return Err(CliError::Config("eta_grid_db must not be empty".into()));
        }
        if let Some(x) = self.eta_grid_db.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("eta_grid_db entry {x} is not finite")));
        }
        if let BetaPolicy::Fixed(v) = self.beta_policy {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("fixed β must be non-negative, got {v}")));
            }
        }
        if !(self.noise.n0 > 0.0 && self.noise.n0.is_finite()) {
            return Err(CliError::Config(format!("n0 must be positive, got {}", self.noise.n0)));
        }
        if !(self.noise.ntilde0 > 0.0 && self.noise.ntilde0.is_finite()) {
            return Err(CliError::Config(format!(
                "ntilde0 must be positive, got {}",
                self.noise.ntilde0
            )));
        }
        if !(self.fairness_scale >= 0.0 && self.fairness_scale.is_finite()) {
            return Err(CliError::Config(format!(
                "fairness_scale must be non-negative, got {}",
                self.fairness_scale
            )));
        }
        Ok(())
    }

    pub fn dimensions(&self) -> Result<Dimensions, CliError> {
        Dimensions::new(self.dims.m, self.dims.k, self.dims.t).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Like [`validate`](Self::validate), additionally requiring M ≥ 2K.
    pub fn require_orthogonalizable(&self) -> Result<Dimensions, CliError> {
        self.validate()?;
        let dims = self.dimensions()?;
        if !dims.supports_orthogonalization() {
            return Err(CliError::Config(format!(
                "orthogonalization needs M ≥ 2K, got M={}, K={}",
                dims.m, dims.k
            )));
        }
        Ok(dims)
    }
}
