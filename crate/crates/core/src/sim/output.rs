use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::runner::{ResultRow, RunArtifacts, TrustPoint};
use super::spec::SolverKind;

pub const RESULT_COLUMNS: [&str; 10] = [
    "sweep_axis",
    "sweep_value",
    "solver",
    "seed",
    "avg_value",
    "assigned_count",
    "unassigned_count",
    "iterations",
    "runtime_ms",
    "error",
];

pub const TRAJECTORY_COLUMNS: [&str; 6] = [
    "seed",
    "task_index",
    "collaborator",
    "model",
    "task_type",
    "trust",
];

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "sweep_axis",
    "sweep_value",
    "solver",
    "n",
    "mean",
    "std",
    "min",
    "max",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.sweep_axis.clone(),
            r.sweep_value.clone(),
            r.solver.to_string(),
            r.seed.to_string(),
            opt(r.avg_value),
            r.assigned_count.to_string(),
            r.unassigned_count.to_string(),
            r.iterations.to_string(),
            opt(r.runtime_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_trajectory_csv<W: Write>(points: &[TrustPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for p in points {
        w.write_record([
            p.seed.to_string(),
            p.task_index.to_string(),
            p.collaborator.to_string(),
            p.model.clone(),
            p.task_type.clone(),
            p.trust.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Mean and spread of one solver's values at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_axis: String,
    pub sweep_value: String,
    pub solver: SolverKind,
    /// Rows with a value.
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single row.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Groups rows by sweep point (first-appearance order) and solver (in
/// [`SolverKind::ALL`] order). Rows without a value are skipped.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut points: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        let key = (r.sweep_axis.as_str(), r.sweep_value.as_str());
        if !points.contains(&key) {
            points.push(key);
        }
    }
    let mut out = Vec::new();
    for (axis, value) in points {
        for solver in SolverKind::ALL {
            let xs: Vec<f64> = rows
                .iter()
                .filter(|r| r.sweep_axis == axis && r.sweep_value == value && r.solver == solver)
                .filter_map(|r| r.avg_value)
                .collect();
            if xs.is_empty() {
                continue;
            }
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            out.push(SummaryRow {
                sweep_axis: axis.to_string(),
                sweep_value: value.to_string(),
                solver,
                n,
                mean,
                std,
                min: xs.iter().copied().fold(f64::INFINITY, f64::min),
                max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    out
}

/// `(sweep_value, mean)` of one solver across the sweep, in sweep order.
pub fn series(summary: &[SummaryRow], solver: SolverKind) -> Vec<(String, f64)> {
    summary
        .iter()
        .filter(|s| s.solver == solver)
        .map(|s| (s.sweep_value.clone(), s.mean))
        .collect()
}

/// Whether consecutive means never rise by more than `tol`.
pub fn non_increasing(means: &[f64], tol: f64) -> bool {
    means.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Whether consecutive means never fall by more than `tol`.
pub fn non_decreasing(means: &[f64], tol: f64) -> bool {
    means.windows(2).all(|w| w[1] + tol >= w[0])
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for s in summary {
        w.write_record([
            s.sweep_axis.clone(),
            s.sweep_value.clone(),
            s.solver.to_string(),
            s.n.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.min.to_string(),
            s.max.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Human-readable table of means per sweep point.
pub fn trend_report(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    for s in summary {
        let point = if s.sweep_value.is_empty() {
            "-"
        } else {
            &s.sweep_value
        };
        out.push_str(&format!(
            "{:<14} {:<12} {:<11} n={:<4} mean={:.6} std={:.6}\n",
            s.sweep_axis, point, s.solver, s.n, s.mean, s.std
        ));
    }
    out
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the artifacts into `dir` and returns the files written.
///
/// CSV: `results.csv`, `summary.csv` and, with a trajectory,
/// `trust_trajectory.csv`. JSON: `results.json` holding everything.
pub fn emit(artifacts: &RunArtifacts, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    if artifacts.rows.is_empty() && artifacts.trajectory.is_empty() {
        return Err(Error::EmptyArtifacts);
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            if !artifacts.rows.is_empty() {
                let p = dir.join("results.csv");
                write_results_csv(&artifacts.rows, create(&p)?)?;
                written.push(p);
                let p = dir.join("summary.csv");
                write_summary_csv(&summarize(&artifacts.rows), create(&p)?)?;
                written.push(p);
            }
            if !artifacts.trajectory.is_empty() {
                let p = dir.join("trust_trajectory.csv");
                write_trajectory_csv(&artifacts.trajectory, create(&p)?)?;
                written.push(p);
            }
        }
        Format::Json => {
            let p = dir.join("results.json");
            let mut w = create(&p)?;
            serde_json::to_writer_pretty(&mut w, artifacts)?;
            w.write_all(b"\n")
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
    }
    Ok(written)
}

pub fn load_artifacts(path: impl AsRef<Path>) -> Result<RunArtifacts> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
