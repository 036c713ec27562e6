//! Flat run configuration, loadable from a JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::harness::{DrawMode, ExperimentPlan};
use crate::optics::{OpticalParams, SourceParams};

pub const DEFAULT_SAMPLES: u64 = 1 << 20;
pub const DEFAULT_REPS: u64 = 30;
pub const DEFAULT_SEED: u64 = 20_220_131;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub r: f64,
    pub gamma: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub samples: u64,
    pub reps: u64,
    pub seed: u64,
    pub mode: DrawMode,
    pub r_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Output directory. Not echoed into results.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Worker threads; `None` lets rayon decide. Not echoed into results.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let optics = OpticalParams::default();
        Self {
            r: 0.3,
            gamma: 2.0,
            t1: optics.t1,
            t2: optics.t2,
            t3: optics.t3,
            theta1: optics.theta1,
            theta2: optics.theta2,
            samples: DEFAULT_SAMPLES,
            reps: DEFAULT_REPS,
            seed: DEFAULT_SEED,
            mode: DrawMode::Independent,
            r_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            gamma_grid: vec![1.5, 2.0],
            out: PathBuf::from("."),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError::File(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::File(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn optics(&self) -> OpticalParams {
        OpticalParams {
            t1: self.t1,
            t2: self.t2,
            t3: self.t3,
            theta1: self.theta1,
            theta2: self.theta2,
        }
    }

    pub fn plan(&self) -> Result<ExperimentPlan, ConfigError> {
        let plan = ExperimentPlan {
            source: SourceParams::new(self.r)?,
            optics: self.optics(),
            gamma: self.gamma,
            samples: self.samples,
            reps: self.reps,
            mode: self.mode,
            seed: self.seed,
        };
        plan.validate()?;
        if self.threads == Some(0) {
            return Err(ConfigError::Threads);
        }
        Ok(plan)
    }

    pub fn validate_grids(&self) -> Result<(), ConfigError> {
        if self.r_grid.is_empty() {
            return Err(ConfigError::EmptyGrid("r"));
        }
        if self.gamma_grid.is_empty() {
            return Err(ConfigError::EmptyGrid("gamma"));
        }
        for &r in &self.r_grid {
            SourceParams::new(r)?;
        }
        for &g in &self.gamma_grid {
            if !(g.is_finite() && g >= 0.0) {
                return Err(ConfigError::Threshold(g));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = RunConfig::default();
        assert_eq!((c.r, c.gamma), (0.3, 2.0));
        assert_eq!((c.t1, c.t2, c.t3), (0.5, 0.75, 0.75));
        assert_eq!((c.theta1, c.theta2), (0.0, 0.0));
        assert_eq!((c.samples, c.reps), (1 << 20, 30));
        assert_eq!(c.r_grid.len(), 11);
        assert_eq!(c.gamma_grid, vec![1.5, 2.0]);
        assert!(c.plan().is_ok());
    }

    #[test]
    fn partial_json_keeps_defaults() {
        let c = RunConfig::from_json_str(r#"{"r": 0.5, "mode": "shared", "samples": 64}"#).unwrap();
        assert_eq!(c.r, 0.5);
        assert_eq!(c.mode, DrawMode::Shared);
        assert_eq!(c.samples, 64);
        assert_eq!(c.gamma, 2.0);
        assert!(RunConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"mode": "both"}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = [
            RunConfig { samples: 0, ..Default::default() },
            RunConfig { reps: 0, ..Default::default() },
            RunConfig { r: -1.0, ..Default::default() },
            RunConfig { gamma: -0.5, ..Default::default() },
            RunConfig { t3: 1.5, ..Default::default() },
            RunConfig { threads: Some(0), ..Default::default() },
        ];
        for c in bad {
            assert!(c.plan().is_err(), "{c:?}");
        }
        let c = RunConfig { r_grid: vec![], ..Default::default() };
        assert_eq!(c.validate_grids(), Err(ConfigError::EmptyGrid("r")));
    }
}
