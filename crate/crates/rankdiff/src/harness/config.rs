use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};
use crate::model::{validate_params, InitialState, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Simulate,
    Sample,
    Density,
    Classify,
    Reverse,
    Validate,
    Tanaka,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything needed to reproduce one CLI run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub params: ModelParams,
    pub initial: InitialState,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            subcommand: Subcommand::Validate,
            params: validate_params(1.0, 1.0, 1.0, 0.0).expect("default parameters are valid"),
            initial: InitialState::new(0.0, 0.0),
            horizon: 1.0,
            steps: 1000,
            paths: 10_000,
            seed: 1,
            out_dir: PathBuf::from("."),
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!((c.params.g(), c.params.h(), c.params.rho(), c.params.sigma()), (1.0, 1.0, 1.0, 0.0));
        assert_eq!(c.horizon, 1.0);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ExperimentConfig::from_json(r#"{"seed": 9, "params": {"g": 0.5, "h": 1.5, "rho": 0.8, "sigma": 0.6}}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.params.lambda(), 2.0);
        assert_eq!(c.paths, ExperimentConfig::default().paths);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"params": {"g": 1, "h": 1, "rho": 1, "sigma": 1}}"#).is_err());
    }
}
