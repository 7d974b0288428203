use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sfde_core::contrast::ContrastWorkspace;
use sfde_core::estimate::{estimate, Estimator};
use sfde_core::io::{read_path_csv, write_path_csv};
use sfde_core::montecarlo::output::write_outputs;
use sfde_core::montecarlo::{run_experiment, run_experiment_with_workers, MonteCarloSummary};
use sfde_core::rng::RNG_ALGORITHM;
use sfde_core::simulate::simulate_path;
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;
use crate::CliError;

/// Everything needed to reproduce a run's outputs.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    seed: Option<u64>,
    estimator: Option<&'a str>,
    warm_start: bool,
    version: &'a str,
    rng: &'a str,
}

fn write_manifest(
    out: &Path,
    loaded: &LoadedConfig,
    manifest: Manifest<'_>,
) -> Result<(), CliError> {
    let manifest = Manifest {
        config_sha256: hex::encode(Sha256::digest(&loaded.bytes)),
        ..manifest
    };
    let mut text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::io(e.to_string()))?;
    text.push('\n');
    fs::write(out.join("manifest.json"), text)
        .map_err(|e| CliError::io(format!("cannot write manifest: {e}")))
}

fn manifest<'a>(command: &'a str) -> Manifest<'a> {
    Manifest {
        command,
        config_sha256: String::new(),
        seed: None,
        estimator: None,
        warm_start: false,
        version: sfde_core::VERSION,
        rng: RNG_ALGORITHM,
    }
}

pub fn output_dir(cli_out: Option<PathBuf>, loaded: &LoadedConfig) -> Result<PathBuf, CliError> {
    let dir = cli_out
        .or_else(|| loaded.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn simulate(loaded: &LoadedConfig, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let spec = loaded.config.model_spec()?;
    let cfg = loaded.config.sim_config(seed)?;
    let path = simulate_path(&spec, &cfg, &loaded.config.theta_true)?;
    let file = out.join("path.csv");
    let f = fs::File::create(&file)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", file.display())))?;
    write_path_csv(&path, std::io::BufWriter::new(f))?;
    write_manifest(
        out,
        loaded,
        Manifest {
            seed: Some(cfg.seed),
            ..manifest("simulate")
        },
    )?;
    println!(
        "wrote {} ({} states, final state {:?})",
        file.display(),
        path.len(),
        path.final_state()
    );
    Ok(())
}

pub fn estimate_path(
    loaded: &LoadedConfig,
    path_file: &Path,
    out: &Path,
    estimator: Estimator,
    warm_start: bool,
) -> Result<(), CliError> {
    let spec = loaded.config.model_spec()?;
    let f = fs::File::open(path_file)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path_file.display())))?;
    let path = read_path_csv(std::io::BufReader::new(f))
        .map_err(|e| CliError::input(format!("{}: {e}", path_file.display())))?;

    let mut mismatches = Vec::new();
    if path.delta() != spec.delay.delta() {
        mismatches.push(format!(
            "delta {} vs model {}",
            path.delta(),
            spec.delay.delta()
        ));
    }
    if path.dim() != spec.dims().d {
        mismatches.push(format!(
            "dimension {} vs model {}",
            path.dim(),
            spec.dims().d
        ));
    }
    if let Some(sim) = &loaded.config.simulation {
        if path.n() != sim.n {
            mismatches.push(format!("n {} vs config {}", path.n(), sim.n));
        }
        if path.epsilon() != sim.epsilon {
            mismatches.push(format!(
                "epsilon {} vs config {}",
                path.epsilon(),
                sim.epsilon
            ));
        }
    }
    if !mismatches.is_empty() {
        return Err(CliError::input(format!(
            "{} header does not match the config: {}",
            path_file.display(),
            mismatches.join(", ")
        )));
    }
    if path.epsilon() <= 0.0 {
        return Err(CliError::input("estimation needs a path with epsilon > 0"));
    }

    let ws = ContrastWorkspace::new(&path, &spec.delay)?;
    let start = if warm_start {
        loaded.config.theta_true.clone()
    } else {
        spec.bounds.center()
    };
    let res = estimate(&ws, &spec, path.epsilon(), estimator, &start)?;

    let dims = spec.dims();
    let mut header: Vec<String> = (1..=dims.p).map(|i| format!("alpha{i}")).collect();
    header.extend((1..=dims.q).map(|j| format!("beta{j}")));
    header.extend(["contrast".to_string(), "converged".to_string()]);
    let mut row: Vec<String> = res.theta_hat.iter().map(f64::to_string).collect();
    row.push(res.contrast_value.to_string());
    row.push(res.converged.to_string());
    let text = format!("{}\n{}\n", header.join(","), row.join(","));

    fs::write(out.join("estimate.csv"), &text)
        .map_err(|e| CliError::io(format!("cannot write estimate: {e}")))?;
    write_manifest(
        out,
        loaded,
        Manifest {
            seed: path.seed(),
            estimator: Some(estimator.name()),
            warm_start,
            ..manifest("estimate")
        },
    )?;
    print!("{text}");
    Ok(())
}

pub fn montecarlo(
    loaded: &LoadedConfig,
    out: &Path,
    seed: Option<u64>,
    estimator: Option<Estimator>,
    warm_start: bool,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let mut plan = loaded.config.plan(seed)?;
    if let Some(e) = estimator {
        plan.estimator = e;
    }
    plan.warm_start |= warm_start;
    plan.validate()
        .map_err(|e| CliError::input(e.to_string()))?;

    let summary = match workers.or(loaded.config.workers) {
        Some(k) => run_experiment_with_workers(&plan, k)?,
        None => run_experiment(&plan)?,
    };
    write_outputs(&summary, out)?;
    write_manifest(
        out,
        loaded,
        Manifest {
            seed: Some(plan.master_seed),
            estimator: Some(plan.estimator.name()),
            warm_start: plan.warm_start,
            ..manifest("montecarlo")
        },
    )?;
    print_table(&summary, &mut std::io::stdout().lock())
        .map_err(|e| CliError::io(e.to_string()))?;
    Ok(())
}

/// One line per cell: `mean(sd)` for every coordinate.
fn print_table<W: Write>(s: &MonteCarloSummary, out: &mut W) -> std::io::Result<()> {
    write!(out, "{:>7} {:>8}", "n", "epsilon")?;
    for name in &s.coord_names {
        write!(out, " {name:>20}")?;
    }
    writeln!(out, " {:>8}", "failures")?;
    for cell in &s.cells {
        write!(out, "{:>7} {:>8}", cell.n, cell.epsilon)?;
        for c in &cell.coords {
            write!(out, " {:>20}", format!("{:.5}({:.5})", c.mean, c.sd))?;
        }
        writeln!(out, " {:>8}", cell.failures)?;
    }
    Ok(())
}
