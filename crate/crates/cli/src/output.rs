use std::fs;
use std::path::Path;

use serde::Serialize;
use smpoisson::mountainpass::LambdaRecord;
use smpoisson::{Certificate, SolveResult};

use crate::error::CliError;

pub const PROFILE_FILE: &str = "profile.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const CERTIFICATE_TEXT: &str = "certificate.txt";
pub const CERTIFICATE_JSON: &str = "certificate.json";

#[derive(Serialize)]
struct ProfileRow {
    r: f64,
    u: f64,
    phi: f64,
}

/// Scalar outcome of a solve, shared by the certificate record and sweep rows.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub q: f64,
    pub t_level: f64,
    pub energy_q: f64,
    pub alpha_norm: f64,
    pub k_t: f64,
    pub truncation_active: bool,
    pub grad_residual: f64,
    pub pohozaev_residual: f64,
    pub positivity: f64,
    pub lambda_final: f64,
}

impl SolveSummary {
    pub fn from_result(res: &SolveResult) -> Self {
        Self {
            q: res.q,
            t_level: res.t_level,
            energy_q: res.energy_q,
            alpha_norm: res.alpha_norm,
            k_t: res.k_t,
            truncation_active: res.truncation_active,
            grad_residual: res.grad_residual,
            pohozaev_residual: res.pohozaev_residual,
            positivity: res.positivity,
            lambda_final: res.lambda_final,
        }
    }
}

#[derive(Serialize)]
struct CertificateRecord<'a> {
    summary: Option<&'a SolveSummary>,
    certificate: Option<&'a Certificate>,
    error: Option<&'a str>,
}

pub fn write_profile(dir: &Path, res: &SolveResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(dir.join(PROFILE_FILE))?;
    for ((&r, &u), &phi) in res
        .u
        .grid()
        .nodes()
        .iter()
        .zip(res.u.values())
        .zip(res.phi.phi())
    {
        w.serialize(ProfileRow { r, u, phi })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_history(dir: &Path, history: &[LambdaRecord]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(dir.join(HISTORY_FILE))?;
    w.write_record([
        "lambda",
        "c_lambda",
        "critical_energy",
        "grad_norm",
        "pohozaev",
        "floor",
        "sweeps",
        "converged",
    ])?;
    for rec in history {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Key-value text plus the same content as JSON. Either `summary` and
/// `certificate` or `error` is present.
pub fn write_certificate(
    dir: &Path,
    summary: Option<&SolveSummary>,
    certificate: Option<&Certificate>,
    error: Option<&str>,
) -> Result<(), CliError> {
    let mut text = String::new();
    if let Some(err) = error {
        text.push_str(&format!("error = {err}\n"));
    }
    if let Some(s) = summary {
        for (key, value) in [
            ("q", s.q),
            ("t_level", s.t_level),
            ("energy_q", s.energy_q),
            ("alpha_norm", s.alpha_norm),
            ("k_t", s.k_t),
            ("grad_residual", s.grad_residual),
            ("pohozaev_residual", s.pohozaev_residual),
            ("positivity", s.positivity),
            ("lambda_final", s.lambda_final),
        ] {
            text.push_str(&format!("{key} = {value:e}\n"));
        }
        text.push_str(&format!("truncation_active = {}\n", s.truncation_active));
    }
    match certificate {
        Some(c) => text.push_str(&c.to_string()),
        None => text.push_str("status = FAILED\n"),
    }
    fs::write(dir.join(CERTIFICATE_TEXT), text)?;
    let record = CertificateRecord {
        summary,
        certificate,
        error,
    };
    fs::write(
        dir.join(CERTIFICATE_JSON),
        serde_json::to_string_pretty(&record)? + "\n",
    )?;
    Ok(())
}
