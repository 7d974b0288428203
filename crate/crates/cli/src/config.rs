//! TOML experiment configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sfde_core::delay_measure::DelayMeasure;
use sfde_core::estimate::Estimator;
use sfde_core::model::{by_name, ModelSpec};
use sfde_core::montecarlo::{Cell, ExperimentPlan};
use sfde_core::simulate::SimConfig;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub theta_true: Vec<f64>,
    pub simulation: Option<SimulationSection>,
    pub experiment: Option<ExperimentSection>,
    /// Replaces the model's built-in delay measure.
    pub delay: Option<DelayMeasure>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default = "default_verbosity")]
    pub verbosity: String,
}

fn default_verbosity() -> String {
    "warn".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub substeps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub replications: usize,
    pub master_seed: u64,
    pub cells: Vec<CellSection>,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub warm_start: bool,
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default = "default_fisher_resolution")]
    pub fisher_resolution: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    pub n: usize,
    pub epsilon: f64,
    pub replications: Option<usize>,
}

fn one() -> usize {
    1
}

fn default_fisher_resolution() -> usize {
    10_000
}

/// A parsed config together with the raw bytes it came from.
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub bytes: Vec<u8>,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::input(format!("config {} is not UTF-8", path.display())))?;
    let config: ExperimentConfig = toml::from_str(text)
        .map_err(|e| CliError::input(format!("invalid config {}:\n{e}", path.display())))?;
    config.model_spec()?;
    Ok(LoadedConfig { config, bytes })
}

impl ExperimentConfig {
    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let spec = by_name(&self.model).ok_or_else(|| {
            CliError::input(format!(
                "unknown model `{}` (available: benchmark2d)",
                self.model
            ))
        })?;
        let spec = match &self.delay {
            Some(delay) => spec.with_delay(delay.clone()),
            None => spec,
        };
        if self.theta_true.len() != spec.dims().n_params() {
            return Err(CliError::input(format!(
                "theta_true has {} entries, model `{}` needs {}",
                self.theta_true.len(),
                self.model,
                spec.dims().n_params()
            )));
        }
        if !spec.bounds.contains(&self.theta_true) {
            return Err(CliError::input(format!(
                "theta_true {:?} outside the parameter box",
                self.theta_true
            )));
        }
        Ok(spec)
    }

    pub fn simulation(&self) -> Result<&SimulationSection, CliError> {
        self.simulation
            .as_ref()
            .ok_or_else(|| CliError::input("config lacks a [simulation] section"))
    }

    pub fn sim_config(&self, seed_override: Option<u64>) -> Result<SimConfig, CliError> {
        let s = self.simulation()?;
        let cfg = SimConfig {
            n: s.n,
            substeps: s.substeps,
            epsilon: s.epsilon,
            seed: seed_override.unwrap_or(s.seed),
        };
        cfg.validate()
            .map_err(|e| CliError::input(format!("[simulation]: {e}")))?;
        Ok(cfg)
    }

    pub fn plan(&self, seed_override: Option<u64>) -> Result<ExperimentPlan, CliError> {
        let e = self
            .experiment
            .as_ref()
            .ok_or_else(|| CliError::input("config lacks an [experiment] section"))?;
        let cells = e
            .cells
            .iter()
            .map(|c| {
                let cell = Cell::new(c.n, c.epsilon);
                match c.replications {
                    Some(r) => cell.with_replications(r),
                    None => cell,
                }
            })
            .collect();
        let mut plan = ExperimentPlan::new(
            self.model_spec()?,
            self.theta_true.clone(),
            cells,
            e.replications,
            seed_override.unwrap_or(e.master_seed),
        );
        plan.estimator = e.estimator;
        plan.warm_start = e.warm_start;
        plan.substeps = e.substeps;
        plan.fisher_resolution = e.fisher_resolution;
        plan.validate()
            .map_err(|e| CliError::input(format!("[experiment]: {e}")))?;
        Ok(plan)
    }
}
