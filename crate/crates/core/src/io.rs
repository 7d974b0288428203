//! Path CSV files.
//!
//! ```text
//! # n=100, delta=0.1, epsilon=0.1, seed=42
//! t,x1,x2
//! -0.1,1,2
//! ...
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Result, SfdeError};
use crate::simulate::PathGrid;

fn format_err(line: u64, message: impl Into<String>) -> SfdeError {
    SfdeError::Format {
        line,
        message: message.into(),
    }
}

/// Metadata line of a path file.
pub fn metadata_line(path: &PathGrid) -> String {
    let seed = path
        .seed()
        .map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "# n={}, delta={}, epsilon={}, seed={}",
        path.n(),
        path.delta(),
        path.epsilon(),
        seed
    )
}

pub fn write_path_csv<W: Write>(path: &PathGrid, mut out: W) -> Result<()> {
    writeln!(out, "{}", metadata_line(path))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim()).map(|i| format!("x{i}")));
    w.write_record(&header)
        .map_err(|e| SfdeError::Io(e.to_string()))?;
    for i in 0..path.len() {
        let mut row = vec![path.time(i).to_string()];
        row.extend(path.state(i).iter().map(f64::to_string));
        w.write_record(&row)
            .map_err(|e| SfdeError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Default)]
struct Metadata {
    n: Option<usize>,
    delta: Option<f64>,
    epsilon: Option<f64>,
    seed: Option<u64>,
}

fn parse_metadata(line: &str) -> Result<Metadata> {
    let body = line.strip_prefix('#').ok_or_else(|| {
        format_err(
            1,
            "first line must be a `# n=…, delta=…, epsilon=…, seed=…` header",
        )
    })?;
    let mut meta = Metadata::default();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| format_err(1, format!("malformed metadata item `{item}`")))?;
        let bad = |what: &str| format_err(1, format!("invalid {what} `{value}`"));
        match key.trim() {
            "n" => meta.n = Some(value.trim().parse().map_err(|_| bad("n"))?),
            "delta" => meta.delta = Some(value.trim().parse().map_err(|_| bad("delta"))?),
            "epsilon" => meta.epsilon = Some(value.trim().parse().map_err(|_| bad("epsilon"))?),
            "seed" => {
                meta.seed = match value.trim() {
                    "none" => None,
                    v => Some(v.parse().map_err(|_| bad("seed"))?),
                }
            }
            other => return Err(format_err(1, format!("unknown metadata key `{other}`"))),
        }
    }
    Ok(meta)
}

pub fn read_path_csv<R: Read>(input: R) -> Result<PathGrid> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = parse_metadata(first.trim_end())?;
    let n = meta.n.ok_or_else(|| format_err(1, "metadata lacks `n`"))?;
    let delta = meta
        .delta
        .ok_or_else(|| format_err(1, "metadata lacks `delta`"))?;
    let epsilon = meta
        .epsilon
        .ok_or_else(|| format_err(1, "metadata lacks `epsilon`"))?;

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| format_err(2, e.to_string()))?
        .clone();
    if header.get(0) != Some("t") || header.len() < 2 {
        return Err(format_err(2, "column header must be `t,x1,…,xd`"));
    }
    let d = header.len() - 1;
    let mut values = Vec::new();
    let mut times = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row as u64 + 3;
        let record = record.map_err(|e| format_err(line, e.to_string()))?;
        if record.len() != d + 1 {
            return Err(format_err(
                line,
                format!("expected {} fields, found {}", d + 1, record.len()),
            ));
        }
        let parse = |i: usize| -> Result<f64> {
            let cell = record.get(i).unwrap_or("").trim();
            cell.parse::<f64>().map_err(|_| {
                format_err(
                    line,
                    format!("non-numeric value `{cell}` in column {}", i + 1),
                )
            })
        };
        times.push(parse(0)?);
        for i in 1..=d {
            values.push(parse(i)?);
        }
    }
    let path = PathGrid::new(n, delta, epsilon, meta.seed, d, values)
        .map_err(|e| format_err(0, format!("path does not match its metadata: {e}")))?;
    for (i, &t) in times.iter().enumerate() {
        if (t - path.time(i)).abs() > 1e-9 {
            return Err(format_err(
                i as u64 + 3,
                format!("time {t} does not match grid time {}", path.time(i)),
            ));
        }
    }
    Ok(path)
}
