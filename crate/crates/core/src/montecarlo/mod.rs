//! Seeded Monte Carlo experiments: simulate → estimate → standardise over
//! R replications per (n, ε) cell, then aggregate.
//!
//! Replication `j` of cell (n, ε) draws its noise from
//! `replication_seed(master_seed, n, ε, j)`, and results are collected by
//! index before any reduction, so summaries do not depend on how rayon
//! schedules the work or on the number of worker threads.

pub mod diagnostics;
pub mod output;

use log::warn;
use rayon::prelude::*;

use crate::contrast::ContrastWorkspace;
use crate::error::{domain, Result, SfdeError};
use crate::estimate::{
    closed_form_from_workspace, fisher_info, minimize_contrast, standardized_errors, Estimator,
    FisherInfo, NelderMeadOptions,
};
use crate::model::ModelSpec;
use crate::rng::replication_seed;
use crate::simulate::{simulate_path, solve_limit_ode, SimConfig};

pub use diagnostics::{ks_distance, qq_data, Reference};

/// Maximum tolerated fraction of failed replications per cell.
pub const FAILURE_TOLERANCE: f64 = 0.05;

/// One (n, ε) design point; `replications` overrides the plan default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub epsilon: f64,
    pub replications: Option<usize>,
}

impl Cell {
    pub fn new(n: usize, epsilon: f64) -> Self {
        Self {
            n,
            epsilon,
            replications: None,
        }
    }

    pub fn with_replications(mut self, r: usize) -> Self {
        self.replications = Some(r);
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub model: ModelSpec,
    pub theta_true: Vec<f64>,
    pub cells: Vec<Cell>,
    pub replications: usize,
    pub master_seed: u64,
    pub estimator: Estimator,
    /// Start the optimizer at θ₀ instead of the box centre.
    pub warm_start: bool,
    pub substeps: usize,
    /// Resolution of the limit path and of the Fisher quadrature.
    pub fisher_resolution: usize,
}

impl ExperimentPlan {
    pub fn new(
        model: ModelSpec,
        theta_true: Vec<f64>,
        cells: Vec<Cell>,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            model,
            theta_true,
            cells,
            replications,
            master_seed,
            estimator: Estimator::ClosedForm,
            warm_start: false,
            substeps: 1,
            fisher_resolution: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.cells.iter().any(|c| c.replications == Some(0)) {
            return domain("replications must be >= 1");
        }
        if self.cells.is_empty() {
            return domain("experiment has no (n, epsilon) cells");
        }
        if self.substeps == 0 || self.fisher_resolution == 0 {
            return domain("substeps and fisher_resolution must be >= 1");
        }
        for c in &self.cells {
            if c.n == 0 || !(c.epsilon > 0.0 && c.epsilon <= 1.0) {
                return domain(format!(
                    "inadmissible cell n={}, epsilon={}",
                    c.n, c.epsilon
                ));
            }
        }
        if !self.model.bounds.contains(&self.theta_true) {
            return domain(format!(
                "theta_true {:?} outside the parameter box",
                self.theta_true
            ));
        }
        if self.estimator == Estimator::ClosedForm && self.model.dims().d != 2 {
            return domain(
                "closed-form estimator is only available for the 2-dimensional benchmark",
            );
        }
        Ok(())
    }
}

/// Mean and unbiased standard deviation of one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordStats {
    pub name: String,
    pub mean: f64,
    /// Divisor R − 1; reported as 0 when fewer than two replications succeeded.
    pub sd: f64,
    pub sd_defined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    pub theta_hat: Vec<f64>,
    pub z: Vec<f64>,
    pub chi2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub epsilon: f64,
    pub replications: usize,
    pub coords: Vec<CoordStats>,
    pub failures: usize,
    pub failed_seeds: Vec<u64>,
    /// Successful replications in index order.
    pub samples: Vec<Replication>,
}

impl CellSummary {
    pub fn coord(&self, name: &str) -> Option<&CoordStats> {
        self.coords.iter().find(|c| c.name == name)
    }

    /// Standardised errors of coordinate `i` across successful replications.
    pub fn z_column(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r.z[i]).collect()
    }

    pub fn chi2_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|r| r.chi2).collect()
    }

    pub fn estimate_column(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r.theta_hat[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub coord_names: Vec<String>,
    pub theta_true: Vec<f64>,
    pub fisher: FisherInfo,
    pub cells: Vec<CellSummary>,
}

impl MonteCarloSummary {
    pub fn cell(&self, n: usize, epsilon: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.epsilon == epsilon)
    }
}

/// Coordinate labels `alpha1..alphap, beta1..betaq`.
pub fn coord_names(p: usize, q: usize) -> Vec<String> {
    (1..=p)
        .map(|i| format!("alpha{i}"))
        .chain((1..=q).map(|j| format!("beta{j}")))
        .collect()
}

/// Simulates and estimates one replication.
pub fn run_replication(plan: &ExperimentPlan, cell: &Cell, seed: u64) -> Result<Vec<f64>> {
    let cfg = SimConfig {
        n: cell.n,
        substeps: plan.substeps,
        epsilon: cell.epsilon,
        seed,
    };
    let path = simulate_path(&plan.model, &cfg, &plan.theta_true)?;
    let ws = ContrastWorkspace::new(&path, &plan.model.delay)?;
    let theta_hat = match plan.estimator {
        Estimator::ClosedForm => closed_form_from_workspace(&ws, cell.epsilon)?.to_vec(),
        Estimator::Optimizer => {
            let start = if plan.warm_start {
                plan.theta_true.clone()
            } else {
                plan.model.bounds.center()
            };
            minimize_contrast(
                &ws,
                &plan.model,
                cell.epsilon,
                &start,
                &NelderMeadOptions::default(),
            )?
            .theta_hat
        }
    };
    if theta_hat.iter().any(|v| !v.is_finite()) {
        return Err(SfdeError::NonFinite("estimate".into()));
    }
    Ok(theta_hat)
}

/// Runs every cell of `plan` on the current rayon pool.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<MonteCarloSummary> {
    plan.validate()?;
    let dims = plan.model.dims();
    let names = coord_names(dims.p, dims.q);
    let ode = solve_limit_ode(&plan.model, &plan.theta_true, plan.fisher_resolution)?;
    let fisher = fisher_info(&plan.model, &plan.theta_true, &ode, plan.fisher_resolution)?;

    let mut cells = Vec::with_capacity(plan.cells.len());
    for cell in &plan.cells {
        if (cell.n as f64).sqrt() * cell.epsilon < 3.0 {
            warn!(
                "n={}, epsilon={}: sqrt(n)*epsilon = {:.3} < 3, asymptotic regime not reached",
                cell.n,
                cell.epsilon,
                (cell.n as f64).sqrt() * cell.epsilon
            );
        }
        let reps = cell.replications.unwrap_or(plan.replications);
        let outcomes: Vec<(u64, Result<Vec<f64>>)> = (0..reps)
            .into_par_iter()
            .map(|j| {
                let seed = replication_seed(plan.master_seed, cell.n, cell.epsilon, j);
                (seed, run_replication(plan, cell, seed))
            })
            .collect();
        cells.push(summarize_cell(plan, cell, &names, &fisher, outcomes)?);
    }
    Ok(MonteCarloSummary {
        coord_names: names,
        theta_true: plan.theta_true.clone(),
        fisher,
        cells,
    })
}

/// Runs `plan` on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    plan: &ExperimentPlan,
    workers: usize,
) -> Result<MonteCarloSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SfdeError::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(plan))
}

fn summarize_cell(
    plan: &ExperimentPlan,
    cell: &Cell,
    names: &[String],
    fisher: &FisherInfo,
    outcomes: Vec<(u64, Result<Vec<f64>>)>,
) -> Result<CellSummary> {
    let reps = outcomes.len();
    let mut samples = Vec::with_capacity(reps);
    let mut failed_seeds = Vec::new();
    for (index, (seed, outcome)) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(theta_hat) => {
                let (z, chi2) =
                    standardized_errors(&theta_hat, &plan.theta_true, fisher, cell.epsilon, cell.n);
                samples.push(Replication {
                    index,
                    seed,
                    theta_hat,
                    z,
                    chi2,
                });
            }
            Err(err) => {
                warn!(
                    "n={}, epsilon={}, replication {index} (seed {seed}) failed: {err}",
                    cell.n, cell.epsilon
                );
                failed_seeds.push(seed);
            }
        }
    }
    let failures = failed_seeds.len();
    if failures as f64 > FAILURE_TOLERANCE * reps as f64 || samples.is_empty() {
        return Err(SfdeError::ExperimentDegenerate {
            n: cell.n,
            epsilon: cell.epsilon,
            failures,
            replications: reps,
            seeds: failed_seeds,
        });
    }
    let m = samples.len() as f64;
    let coords = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mean = samples.iter().map(|r| r.theta_hat[i]).sum::<f64>() / m;
            let sd_defined = samples.len() >= 2;
            let sd = if sd_defined {
                (samples
                    .iter()
                    .map(|r| (r.theta_hat[i] - mean).powi(2))
                    .sum::<f64>()
                    / (m - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            CoordStats {
                name: name.clone(),
                mean,
                sd,
                sd_defined,
            }
        })
        .collect();
    Ok(CellSummary {
        n: cell.n,
        epsilon: cell.epsilon,
        replications: reps,
        coords,
        failures,
        failed_seeds,
        samples,
    })
}
