//! Artifact files: CSV tables, timing, plot script and manifest.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::run::{Outcome, RunError};

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> RunError {
    RunError::Io(std::io::Error::other(e.to_string()))
}

/// Writes every artifact and returns the paths, main CSV first.
pub fn write_outcome(
    out: &Path,
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    threads: usize,
    wall: f64,
) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(out)?;
    let stem = &cfg.output;
    let mut written = Vec::new();
    for t in &outcome.tables {
        let p = out.join(format!("{stem}{}.csv", t.suffix));
        write_table(&p, &t.header, &t.rows)?;
        written.push(p);
    }
    let timing: Vec<Vec<String>> = outcome
        .timing
        .iter()
        .map(|(label, s)| vec![label.clone(), format!("{s:.6e}")])
        .collect();
    let p = out.join(format!("{stem}_timing.csv"));
    write_table(&p, &["row", "seconds"], &timing)?;
    written.push(p);
    if cfg.plot {
        let p = out.join(format!("{stem}.gp"));
        fs::write(&p, &outcome.plot)?;
        written.push(p);
    }
    let mut manifest = format!(
        "command = {}\nversion = {}\nthreads = {threads}\nwall_seconds = {wall:.6}\nalpha = {} ({})\n\n[config]\n",
        cfg.command.name(),
        env!("CARGO_PKG_VERSION"),
        cfg.alpha_text,
        cfg.alpha,
    );
    for (k, v) in &cfg.lines {
        manifest.push_str(&format!("{k} = {v}\n"));
    }
    let p = out.join(format!("{stem}_manifest.txt"));
    fs::write(&p, manifest)?;
    written.push(p);
    Ok(written)
}
