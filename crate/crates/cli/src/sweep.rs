use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{SolverConfig, TSetting};
use crate::error::CliError;
use crate::solve::cmd_solve;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "sweep_summary.txt";

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub converged: bool,
    pub energy_q: Option<f64>,
    pub alpha_norm: Option<f64>,
    pub grad_residual: Option<f64>,
    pub pohozaev_residual: Option<f64>,
    pub truncation_active: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// For a q-sweep: `(last converged q, first failing q)` around the first
    /// failure, `None` on the left when the smallest value already fails.
    pub bracket: Option<(Option<f64>, f64)>,
}

fn with_value(cfg: &SolverConfig, parameter: &str, value: f64) -> Result<SolverConfig, CliError> {
    let mut c = cfg.clone();
    match parameter {
        "q" => c.solver.q = value,
        "T" => c.solver.t = TSetting::Value(value),
        "p" => c.nonlinearity.p = value,
        other => {
            return Err(CliError::Config(format!(
                "unknown sweep parameter {other:?}"
            )))
        }
    }
    c.validate()?;
    Ok(c)
}

fn run_row(
    cfg: &SolverConfig,
    parameter: &str,
    value: f64,
    dir: &Path,
) -> Result<SweepRow, CliError> {
    let row_cfg = with_value(cfg, parameter, value)?;
    let mut row = SweepRow {
        parameter: parameter.to_string(),
        value,
        converged: false,
        energy_q: None,
        alpha_norm: None,
        grad_residual: None,
        pohozaev_residual: None,
        truncation_active: None,
        error: None,
    };
    match cmd_solve(&row_cfg, dir) {
        Ok(res) => {
            row.converged = true;
            row.energy_q = Some(res.energy_q);
            row.alpha_norm = Some(res.alpha_norm);
            row.grad_residual = Some(res.grad_residual);
            row.pohozaev_residual = Some(res.pohozaev_residual);
            row.truncation_active = Some(res.truncation_active);
        }
        Err(CliError::Failed(msg)) | Err(CliError::Config(msg)) => row.error = Some(msg),
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn row_dir(root: &Path, index: usize) -> PathBuf {
    root.join("rows").join(format!("{index:03}"))
}

/// Independent solves for every value of `cfg.sweep`, in parallel. Rows
/// that fail are recorded and do not stop the sweep.
pub fn cmd_sweep(cfg: &SolverConfig, dir: &Path) -> Result<SweepReport, CliError> {
    let parameter = cfg.sweep.parameter.as_str();
    if cfg.sweep.values.is_empty() {
        return Err(CliError::Config("sweep.values is empty".into()));
    }
    if cfg.sweep.values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("sweep.values must be finite".into()));
    }
    // Surface invalid values as a config error before any solve starts.
    for &v in &cfg.sweep.values {
        with_value(cfg, parameter, v)?;
    }
    fs::create_dir_all(dir)?;
    let mut rows: Vec<SweepRow> = cfg
        .sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| run_row(cfg, parameter, v, &row_dir(dir, i)))
        .collect::<Result<_, _>>()?;

    let bracket = if parameter == "q" {
        let b = first_failure_bracket(&rows);
        match b {
            Some((Some(lo), hi)) => {
                let mut next = cfg.sweep.values.len();
                let (lo, hi, extra) = bisect(cfg, dir, lo, hi, &mut next)?;
                rows.extend(extra);
                Some((Some(lo), hi))
            }
            other => other,
        }
    } else {
        None
    };

    write_table(dir, &rows)?;
    let mut summary = format!("parameter = {parameter}\nrows = {}\n", rows.len());
    summary.push_str(&format!(
        "converged = {}\n",
        rows.iter().filter(|r| r.converged).count()
    ));
    match bracket {
        Some((lo, hi)) => summary.push_str(&format!(
            "first_failure_bracket = [{}, {hi}]\n",
            lo.map_or("none".to_string(), |v| v.to_string())
        )),
        None if parameter == "q" => summary.push_str("first_failure_bracket = none\n"),
        None => {}
    }
    fs::write(dir.join(SUMMARY_FILE), summary)?;
    Ok(SweepReport { rows, bracket })
}

/// Smallest failing q and the largest converged q below it.
fn first_failure_bracket(rows: &[SweepRow]) -> Option<(Option<f64>, f64)> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let fail = sorted.iter().position(|r| !r.converged)?;
    let lo = sorted[..fail].last().map(|r| r.value);
    Some((lo, sorted[fail].value))
}

fn bisect(
    cfg: &SolverConfig,
    dir: &Path,
    mut lo: f64,
    mut hi: f64,
    next: &mut usize,
) -> Result<(f64, f64, Vec<SweepRow>), CliError> {
    let mut extra = Vec::new();
    for _ in 0..cfg.sweep.bisect_steps {
        let mid = 0.5 * (lo + hi);
        let row = run_row(cfg, "q", mid, &row_dir(dir, *next))?;
        *next += 1;
        if row.converged {
            lo = mid;
        } else {
            hi = mid;
        }
        extra.push(row);
    }
    Ok((lo, hi, extra))
}

fn write_table(dir: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(dir.join(SWEEP_FILE))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
