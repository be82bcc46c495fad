//! CSV, snapshot and manifest writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use muskat_core::{DiagnosticsRecord, Trajectory};

use crate::config::{Config, RunRecord};
use crate::error::CliError;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = DiagnosticsRecord::COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn snapshot_csv(x: &[f64], f: &[f64]) -> String {
    let mut out = String::from("x,f\n");
    for (a, b) in x.iter().zip(f) {
        let _ = writeln!(out, "{},{}", fmt_f64(*a), fmt_f64(*b));
    }
    out
}

/// Writes diagnostics, optional snapshots and the manifest into
/// `config.output.dir`; returns the paths written (manifest last).
pub fn write_run(config: &Config, traj: &Trajectory) -> Result<Vec<PathBuf>, CliError> {
    let dir = &config.output.dir;
    let mut outputs = Vec::new();

    let diag = dir.join(DIAGNOSTICS_FILE);
    write_file(&diag, &diagnostics_csv(&traj.records))?;
    outputs.push(diag);

    if config.output.snapshots {
        let width = traj.steps.max(1).to_string().len().max(6);
        for (state, step) in traj.states.iter().zip(&traj.step_indices) {
            let path = dir.join(SNAPSHOT_DIR).join(format!("step_{step:0width$}.csv"));
            write_file(&path, &snapshot_csv(state.grid().nodes(), state.samples()))?;
            outputs.push(path);
        }
    }

    let manifest = dir.join(MANIFEST_FILE);
    outputs.push(manifest.clone());
    let mut echo = config.clone();
    echo.run = Some(RunRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        termination: traj.termination.as_str().to_string(),
        steps: traj.steps,
        outputs: outputs.clone(),
        message: traj.message.clone(),
    });
    let text = toml::to_string(&echo).map_err(|e| CliError::Config(format!("cannot encode manifest: {e}")))?;
    write_file(&manifest, &text)?;
    Ok(outputs)
}
