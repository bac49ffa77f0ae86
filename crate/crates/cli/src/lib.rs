//! Batch front-end: `solve`, `sweep` and `verify` driven by a TOML file.

pub mod config;
pub mod error;
pub mod output;
pub mod solve;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::SolverConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "smpoisson",
    version,
    about = "Radial Schrödinger-Poisson ground states by mountain-pass continuation"
)]
pub struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides SP_OUT_DIR and the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the randomized invariant suite.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (overrides SP_THREADS and the config).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve once and certify the result.
    Solve,
    /// Independent solves over a list of q, T or p values.
    Sweep {
        #[arg(long, value_parser = ["q", "T", "p"])]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Run the invariant suite and print the pass/fail matrix.
    Verify,
}

/// Merges file, environment and flags, in increasing priority.
pub fn resolve_config(cli: &Cli) -> Result<SolverConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => SolverConfig::load(path)?,
        None => SolverConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.verify.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.output.threads = Some(threads);
    }
    if let Command::Sweep { param, values } = &cli.command {
        if let Some(p) = param {
            cfg.sweep.parameter = p.clone();
        }
        if let Some(v) = values {
            cfg.sweep.values = v.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    if let Some(n) = cfg.output.threads {
        // Only the first call in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let dir = cfg.output.dir.clone();
    match cli.command {
        Command::Solve => {
            let res = solve::cmd_solve(&cfg, &dir)?;
            println!("{}", res.certificate);
            println!("energy_q = {:.10}", res.energy_q);
            println!("artifacts in {}", dir.display());
            Ok(())
        }
        Command::Sweep { .. } => {
            let report = sweep::cmd_sweep(&cfg, &dir)?;
            for row in &report.rows {
                match (&row.energy_q, &row.error) {
                    (Some(e), _) => println!(
                        "{} = {}: converged, energy_q = {e:.10}",
                        row.parameter, row.value
                    ),
                    (None, Some(err)) => {
                        println!("{} = {}: failed ({err})", row.parameter, row.value)
                    }
                    (None, None) => println!("{} = {}: failed", row.parameter, row.value),
                }
            }
            if let Some((lo, hi)) = report.bracket {
                let lo = lo.map_or("none".to_string(), |v| v.to_string());
                println!("first failure bracket: [{lo}, {hi}]");
            }
            println!("table in {}", dir.join(sweep::SWEEP_FILE).display());
            Ok(())
        }
        Command::Verify => {
            let report = verify::cmd_verify(&cfg, &dir)?;
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Failed(format!(
                    "failing invariants: {}",
                    report.failures().join(", ")
                )))
            }
        }
    }
}
