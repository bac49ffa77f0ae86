use std::fs;
use std::path::Path;

use smpoisson::{continuation_run, SolveError, SolveResult};

use crate::config::SolverConfig;
use crate::error::CliError;
use crate::output::{write_certificate, write_history, write_profile, SolveSummary};

/// Runs the solver for `cfg` and writes the profile, history and
/// certificate into `dir`. Succeeds only when the certificate passes.
pub fn cmd_solve(cfg: &SolverConfig, dir: &Path) -> Result<SolveResult, CliError> {
    fs::create_dir_all(dir)?;
    let nl = cfg.build_nonlinearity()?;
    let grid = cfg.grid()?;
    let outcome = continuation_run(&nl, cfg.solver.q, cfg.truncation()?, &grid, &cfg.settings());
    write_outcome(dir, outcome)
}

/// Writes whatever artifacts the outcome allows and maps it to a CLI result.
pub(crate) fn write_outcome(
    dir: &Path,
    outcome: Result<SolveResult, SolveError>,
) -> Result<SolveResult, CliError> {
    match outcome {
        Ok(res) => {
            let summary = SolveSummary::from_result(&res);
            write_profile(dir, &res)?;
            write_history(dir, &res.history)?;
            write_certificate(dir, Some(&summary), Some(&res.certificate), None)?;
            match &res.certificate.failure {
                None => Ok(res),
                Some(reason) => Err(CliError::Failed(format!("certificate failed: {reason}"))),
            }
        }
        Err(SolveError::Setup(e)) => Err(CliError::Config(e.to_string())),
        Err(err @ SolveError::TruncationActive(_)) => {
            let message = err.to_string();
            if let SolveError::TruncationActive(res) = err {
                let summary = SolveSummary::from_result(&res);
                write_profile(dir, &res)?;
                write_history(dir, &res.history)?;
                write_certificate(dir, Some(&summary), Some(&res.certificate), Some(&message))?;
            }
            Err(CliError::Failed(message))
        }
        Err(err) => {
            let message = err.to_string();
            write_history(dir, err.history())?;
            write_certificate(dir, None, None, Some(&message))?;
            Err(CliError::Failed(message))
        }
    }
}
