//! CSV artifacts of a Monte Carlo run.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so files
//! are byte-stable for identical summaries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::diagnostics::{qq_data, Reference};
use super::{CellSummary, MonteCarloSummary};
use crate::error::{Result, SfdeError};

fn csv_err(e: csv::Error) -> SfdeError {
    SfdeError::Io(e.to_string())
}

fn cell_tag(cell: &CellSummary) -> String {
    format!("n={}|epsilon={}", cell.n, cell.epsilon)
}

/// `n,epsilon,coord,mean,sd,failures`, one row per cell and coordinate.
pub fn write_summary_csv<W: Write>(summary: &MonteCarloSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "epsilon", "coord", "mean", "sd", "failures"])
        .map_err(csv_err)?;
    for cell in &summary.cells {
        for c in &cell.coords {
            w.write_record([
                cell.n.to_string(),
                cell.epsilon.to_string(),
                c.name.clone(),
                c.mean.to_string(),
                c.sd.to_string(),
                cell.failures.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `kind,theoretical,sample` rows; `kind` names the reference and the cell.
pub fn write_qq_csv<W: Write>(
    cells: &[CellSummary],
    reference: Reference,
    column: impl Fn(&CellSummary) -> Vec<f64>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "theoretical", "sample"])
        .map_err(csv_err)?;
    for cell in cells {
        let kind = format!("{}|{}", reference.label(), cell_tag(cell));
        for (t, s) in qq_data(&column(cell), reference)? {
            w.write_record([kind.clone(), t.to_string(), s.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `n,epsilon,replication,seed,chi2`.
pub fn write_chi2_samples_csv<W: Write>(summary: &MonteCarloSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "epsilon", "replication", "seed", "chi2"])
        .map_err(csv_err)?;
    for cell in &summary.cells {
        for r in &cell.samples {
            w.write_record([
                cell.n.to_string(),
                cell.epsilon.to_string(),
                r.index.to_string(),
                r.seed.to_string(),
                r.chi2.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-replication estimates and standardised errors.
pub fn write_estimates_csv<W: Write>(summary: &MonteCarloSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "n".to_string(),
        "epsilon".into(),
        "replication".into(),
        "seed".into(),
    ];
    header.extend(summary.coord_names.iter().cloned());
    header.extend(summary.coord_names.iter().map(|c| format!("z_{c}")));
    w.write_record(&header).map_err(csv_err)?;
    for cell in &summary.cells {
        for r in &cell.samples {
            let mut row = vec![
                cell.n.to_string(),
                cell.epsilon.to_string(),
                r.index.to_string(),
                r.seed.to_string(),
            ];
            row.extend(r.theta_hat.iter().map(f64::to_string));
            row.extend(r.z.iter().map(f64::to_string));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `summary.csv`, `qq_normal_<coord>.csv`, `qq_chi2.csv`,
/// `chi2_samples.csv` and `estimates.csv` into `dir`.
pub fn write_outputs(summary: &MonteCarloSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut create = |name: String| -> Result<fs::File> {
        let path = dir.join(name);
        let file = fs::File::create(&path)?;
        written.push(path);
        Ok(file)
    };
    write_summary_csv(summary, create("summary.csv".into())?)?;
    for (i, name) in summary.coord_names.iter().enumerate() {
        write_qq_csv(
            &summary.cells,
            Reference::StdNormal,
            |c| c.z_column(i),
            create(format!("qq_normal_{name}.csv"))?,
        )?;
    }
    let df = summary.coord_names.len() as f64;
    write_qq_csv(
        &summary.cells,
        Reference::ChiSquare(df),
        CellSummary::chi2_samples,
        create("qq_chi2.csv".into())?,
    )?;
    write_chi2_samples_csv(summary, create("chi2_samples.csv".into())?)?;
    write_estimates_csv(summary, create("estimates.csv".into())?)?;
    Ok(written)
}
