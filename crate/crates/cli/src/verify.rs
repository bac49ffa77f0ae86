//! Invariant suite behind `smpoisson verify`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smpoisson::functional::{check_cutoff, Cutoff};
use smpoisson::grid::{gradient_norm_sq, h1_inner, ls_power, volume_integral};
use smpoisson::nonlinearity::{log_scan, SCAN_MAX, SCAN_MIN, SCAN_POINTS};
use smpoisson::poisson::solve_poisson_fd;
use smpoisson::*;

use crate::config::SolverConfig;
use crate::error::CliError;

pub const VERIFY_TEXT: &str = "verify.txt";
pub const VERIFY_JSON: &str = "verify.json";

/// Linear ramp from 1 to 0 on `[1, 1.25]`: slope 4, breaks the contract.
#[derive(Debug, Clone, Copy)]
pub struct SteepCutoff;

impl Cutoff for SteepCutoff {
    fn value(&self, s: f64) -> f64 {
        (1.0 - 4.0 * (s - 1.0)).clamp(0.0, 1.0)
    }

    fn derivative(&self, s: f64) -> f64 {
        if s > 1.0 && s < 1.25 {
            -4.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub tolerance_scale: f64,
    pub results: Vec<InvariantResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name)
            .collect()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<24} {:>12} {:>10}  status",
            "invariant", "value", "tolerance"
        )?;
        for r in &self.results {
            writeln!(
                f,
                "{:<24} {:>12.4e} {:>10.1e}  {}",
                r.name,
                r.value,
                r.tolerance,
                if r.passed { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn random_profile(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> RadialFunction {
    let terms: Vec<[f64; 4]> = (0..3)
        .map(|_| {
            [
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(-0.5..1.5),
                rng.gen_range(0.0..4.0),
            ]
        })
        .collect();
    RadialFunction::from_fn(grid, |r| {
        terms
            .iter()
            .map(|&[c, a, b, k]| c * (-a * r * r).exp() * (1.0 + b * r) * (k * r).cos())
            .sum()
    })
    .expect("finite profile")
}

fn interaction(u: &RadialFunction, phi: &[f64]) -> f64 {
    let rho_phi: Vec<f64> = u.values().iter().zip(phi).map(|(v, p)| v * v * p).collect();
    u.grid().integrate(&rho_phi)
}

struct Suite {
    scale: f64,
    results: Vec<InvariantResult>,
}

impl Suite {
    /// Records `value ≤ tolerance·scale`.
    fn below(&mut self, name: &'static str, value: f64, tolerance: f64) {
        let tolerance = tolerance * self.scale;
        self.results.push(InvariantResult {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        });
    }
}

fn poisson_identity(suite: &mut Suite, grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) {
    let (mut identity, mut fd) = (0.0_f64, 0.0_f64);
    for _ in 0..10 {
        let u = random_profile(grid, rng);
        for q in [0.1, 1.0] {
            let field = solve_poisson(&u, q);
            let rhs = q * interaction(&u, field.phi());
            identity = identity.max((field.d12_norm_sq - rhs).abs() / rhs);
            let oracle = solve_poisson_fd(&u, q);
            let scale = field.phi().iter().fold(0.0_f64, |m, p| m.max(p.abs()));
            for (a, b) in field.phi().iter().zip(&oracle).skip(1) {
                fd = fd.max((a - b).abs() / scale);
            }
        }
    }
    suite.below("poisson_identity", identity, 1e-6);
    suite.below("poisson_fd_agreement", fd, 1e-8);
}

fn poisson_scaling(suite: &mut Suite, grid: &Arc<RadialGrid>) {
    let q = 1.0;
    let (mut nodes, mut total) = (0.0_f64, 0.0_f64);
    let u = RadialFunction::from_fn(grid, |r| (-r * r).exp()).expect("finite profile");
    let base = solve_poisson(&u, q);
    for theta in [0.5, 2.0] {
        let ut = RadialFunction::from_fn(grid, |r| (-r * r / (theta * theta)).exp())
            .expect("finite profile");
        let field = solve_poisson(&ut, q);
        for (i, &r) in grid.nodes().iter().enumerate() {
            let expected = theta * theta * base.eval(r / theta);
            nodes = nodes.max((field.phi()[i] - expected).abs() / expected.abs());
        }
        let expected = theta.powi(5) * base.interaction;
        total = total.max((field.interaction - expected).abs() / expected);
    }
    suite.below("poisson_scaling_nodes", nodes, 1e-5);
    suite.below("poisson_scaling_total", total, 1e-5);
}

fn unit_ball(suite: &mut Suite, grid: &Arc<RadialGrid>) {
    let h = grid.step();
    let values = grid
        .nodes()
        .iter()
        .map(|&r| {
            if (r - 1.0).abs() < 0.5 * h {
                0.5_f64.sqrt()
            } else if r < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let u = RadialFunction::from_values(grid, values).expect("finite profile");
    let q = 1.0;
    let field = solve_poisson(&u, q);
    let mut worst = 0.0_f64;
    for (i, &r) in grid.nodes().iter().enumerate() {
        let exact = if r <= 1.0 {
            q * (3.0 - r * r) / 6.0
        } else {
            q / (3.0 * r)
        };
        worst = worst.max((field.phi()[i] - exact).abs() / exact);
    }
    suite.below("poisson_unit_ball", worst, 1e-6);
}

fn cutoff_contract(suite: &mut Suite, cutoff: &dyn Cutoff) {
    let report = check_cutoff(cutoff, 10_000);
    suite.results.push(InvariantResult {
        name: "cutoff_contract",
        value: report.max_slope,
        tolerance: 2.0,
        passed: report.passed(),
    });
}

fn split_inequalities(suite: &mut Suite, split: &SplitNonlinearity) {
    let m = split.m();
    let mut worst = 0.0_f64;
    for s in log_scan(SCAN_MIN, SCAN_MAX, SCAN_POINTS) {
        // Both sides of g₂ = g₁ − g carry round-off of size g₁.
        let lin = (m * s - split.g2(s)) / (m * s + split.g1(s));
        let quad = (0.5 * m * s * s - split.big_g2(s)) / (0.5 * m * s * s + split.big_g1(s));
        worst = worst.max(lin).max(quad);
    }
    suite.below("split_lower_bounds", worst.max(0.0), 1e-12);
    let c_eps = split
        .epsilon_bound_certificate(0.5)
        .map(|c| c.c_eps)
        .unwrap_or(f64::INFINITY);
    suite.results.push(InvariantResult {
        name: "split_c_eps_finite",
        value: c_eps,
        tolerance: f64::INFINITY,
        passed: c_eps.is_finite(),
    });
}

fn gradient_fd(
    suite: &mut Suite,
    grid: &Arc<RadialGrid>,
    split: &SplitNonlinearity,
    cutoff: &Arc<dyn Cutoff>,
    rng: &mut ChaCha8Rng,
) {
    let mut worst = 0.0_f64;
    for pair in 0..20 {
        let u = random_profile(grid, rng).scaled(rng.gen_range(0.3..1.5));
        let v = random_profile(grid, rng);
        let lambda = rng.gen_range(0.5..=1.0);
        let q = rng.gen_range(0.05..2.0);
        // Even pairs sit inside the cutoff transition.
        let t = if pair % 2 == 0 {
            let ratio = rng.gen_range(1.05..1.95);
            (ls_power(&u, ALPHA).expect("α > 1") / ratio).powf(1.0 / ALPHA)
        } else {
            1e6
        };
        let trunc = TruncationConfig::with_cutoff(t, Arc::clone(cutoff)).expect("T > 0");
        let f = Functional::new(split.clone(), q, Some(trunc)).expect("q ≥ 0");
        let analytic = h1_inner(&f.gradient(&u, lambda), &v);
        let eps = 1e-5;
        let fd = (f.energy(&u.add_scaled(eps, &v), lambda).total
            - f.energy(&u.add_scaled(-eps, &v), lambda).total)
            / (2.0 * eps);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-12));
    }
    suite.below("gradient_vs_fd", worst, 1e-5);
}

fn pohozaev_critical(suite: &mut Suite, cfg: &SolverConfig) -> Result<(), CliError> {
    let nl = cfg.build_nonlinearity()?;
    let split = nl
        .modify()
        .split()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let grid = cfg.grid()?;
    let (poho, grad) =
        match continuation_run(&nl, 0.0, TruncationLevel::Auto, &grid, &cfg.settings()) {
            Ok(res) => {
                let half_kinetic = 0.5 * gradient_norm_sq(&res.u);
                let potential = volume_integral(&res.u.map(|s| split.primitive(s)));
                (
                    (half_kinetic - 3.0 * potential).abs() / half_kinetic,
                    res.grad_residual,
                )
            }
            Err(SolveError::Setup(e)) => return Err(CliError::Config(e.to_string())),
            Err(_) => (f64::INFINITY, f64::INFINITY),
        };
    suite.below("critical_gradient", grad, cfg.solver.tol_grad);
    suite.below("critical_pohozaev", poho, cfg.solver.tol_poho);
    Ok(())
}

/// Runs every invariant and writes the pass/fail matrix to `dir`.
pub fn cmd_verify(cfg: &SolverConfig, dir: &Path) -> Result<VerifyReport, CliError> {
    let v = &cfg.verify;
    let check_grid =
        RadialGrid::new(v.r_max, v.n).map_err(|e| CliError::Config(format!("verify grid: {e}")))?;
    let cutoff: Arc<dyn Cutoff> = match v.cutoff.as_str() {
        "steep" => Arc::new(SteepCutoff),
        _ => Arc::new(QuinticCutoff),
    };
    let split = cfg
        .build_nonlinearity()?
        .modify()
        .split()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
    let mut suite = Suite {
        scale: v.tolerance_scale,
        results: Vec::new(),
    };
    poisson_identity(&mut suite, &check_grid, &mut rng);
    poisson_scaling(&mut suite, &check_grid);
    unit_ball(&mut suite, &check_grid);
    cutoff_contract(&mut suite, cutoff.as_ref());
    split_inequalities(&mut suite, &split);
    gradient_fd(&mut suite, &cfg.grid()?, &split, &cutoff, &mut rng);
    pohozaev_critical(&mut suite, cfg)?;

    let report = VerifyReport {
        seed: v.seed,
        tolerance_scale: v.tolerance_scale,
        results: suite.results,
    };
    fs::create_dir_all(dir)?;
    fs::write(dir.join(VERIFY_TEXT), report.to_string())?;
    fs::write(
        dir.join(VERIFY_JSON),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    Ok(report)
}
