//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smpoisson::functional::check_cutoff;
use smpoisson::grid::{
    gradient_norm_sq, h1_inner, ls_power, volume_integral, RadialFunction, RadialGrid,
};
use smpoisson::mountainpass::{build_path, ray_path};
use smpoisson::nonlinearity::{log_scan, SCAN_MAX, SCAN_MIN, SCAN_POINTS};
use smpoisson::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// `∫ φ_u u²` recomputed from nodal values.
fn interaction(u: &RadialFunction, phi: &[f64]) -> f64 {
    let rho_phi: Vec<f64> = u.values().iter().zip(phi).map(|(v, p)| v * v * p).collect();
    u.grid().integrate(&rho_phi)
}

/// Random smooth radial profile: a sum of three modulated Gaussians.
fn random_profile(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> RadialFunction {
    let terms: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(-0.5..1.5),
                rng.gen_range(0.0..4.0),
            )
        })
        .collect();
    RadialFunction::from_fn(grid, |r| {
        terms
            .iter()
            .map(|&(c, a, b, k)| c * (-a * r * r).exp() * (1.0 + b * r) * (k * r).cos())
            .sum()
    })
    .unwrap()
}

/// Potential of the charge `e^{−βr²}` with coupling `q`.
fn gaussian_potential(beta: f64, q: f64, r: f64) -> f64 {
    if r == 0.0 {
        return q / (2.0 * beta);
    }
    q * PI.sqrt() / (4.0 * beta.powf(1.5)) * libm::erf(beta.sqrt() * r) / r
}

fn poisson_identity(grid: &Arc<RadialGrid>, tol: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let u = random_profile(grid, &mut rng);
        for q in [0.1, 1.0] {
            let field = solve_poisson(&u, q);
            let rhs = q * interaction(&u, field.phi());
            worst = worst.max((field.d12_norm_sq - rhs).abs() / rhs);
        }
    }
    outcome(
        worst <= tol,
        format!("max rel. deviation {worst:.3e} (tol {tol:.0e})"),
    )
}

fn scaling_law(grid: &Arc<RadialGrid>, tol: f64) -> Outcome {
    let q = 1.0;
    let (mut node_dev, mut int_dev) = (0.0_f64, 0.0_f64);
    for a in [0.5, 1.0, 2.0] {
        let u = RadialFunction::from_fn(grid, |r| (-a * r * r).exp()).unwrap();
        let base = solve_poisson(&u, q);
        for theta in [0.5, 2.0] {
            let ut =
                RadialFunction::from_fn(grid, |r| (-a * r * r / (theta * theta)).exp()).unwrap();
            let field = solve_poisson(&ut, q);
            for (i, &r) in grid.nodes().iter().enumerate() {
                let expected = theta * theta * gaussian_potential(2.0 * a, q, r / theta);
                node_dev = node_dev.max((field.phi()[i] - expected).abs() / expected);
            }
            let scaled = theta.powi(5) * base.interaction;
            int_dev = int_dev.max((field.interaction - scaled).abs() / scaled);
        }
    }
    outcome(
        node_dev <= tol && int_dev <= tol,
        format!(
            "node deviation {node_dev:.3e}, θ⁵ interaction deviation {int_dev:.3e} (tol {tol:.0e})"
        ),
    )
}

fn unit_ball(grid: &Arc<RadialGrid>, tol: f64) -> Outcome {
    // Indicator of the unit ball, with density ½ on the jump node.
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            if (r - 1.0).abs() < 0.5 * grid.step() {
                0.5_f64.sqrt()
            } else if r < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let u = RadialFunction::from_values(grid, values).unwrap();
    let mut worst = 0.0_f64;
    for q in [0.1, 1.0] {
        let field = solve_poisson(&u, q);
        for (i, &r) in grid.nodes().iter().enumerate() {
            let exact = if r <= 1.0 {
                q * (3.0 - r * r) / 6.0
            } else {
                q / (3.0 * r)
            };
            worst = worst.max((field.phi()[i] - exact).abs() / exact);
        }
    }
    outcome(
        worst <= tol,
        format!("max rel. error vs closed form {worst:.3e} (tol {tol:.0e})"),
    )
}

fn cubic_split() -> SplitNonlinearity {
    Nonlinearity::power(3.0).unwrap().modify().split().unwrap()
}

fn gradient_consistency(grid: &Arc<RadialGrid>, tol: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut worst, mut active) = (0.0_f64, 0);
    for pair in 0..20 {
        let u = random_profile(grid, &mut rng).scaled(rng.gen_range(0.3..1.5));
        let v = random_profile(grid, &mut rng);
        let lambda = rng.gen_range(0.5..=1.0);
        let q = rng.gen_range(0.05..2.0);
        // Half of the pairs sit in the cutoff transition ‖u‖_α^α/T^α ∈ (1, 2).
        let trunc = if pair % 2 == 0 {
            let ratio = rng.gen_range(1.05..1.95);
            let t = (ls_power(&u, ALPHA).unwrap() / ratio).powf(1.0 / ALPHA);
            TruncationConfig::new(t).unwrap()
        } else {
            TruncationConfig::new(1e6).unwrap()
        };
        let f = Functional::new(cubic_split(), q, Some(trunc)).unwrap();
        let k = f.k_t(&u);
        if k > 0.0 && k < 1.0 {
            active += 1;
        }
        let analytic = h1_inner(&f.gradient(&u, lambda), &v);
        let eps = 1e-5;
        let fd = (f.energy(&u.add_scaled(eps, &v), lambda).total
            - f.energy(&u.add_scaled(-eps, &v), lambda).total)
            / (2.0 * eps);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-12));
    }
    outcome(
        worst <= tol && active >= 10,
        format!(
            "max rel. error {worst:.3e} over 20 pairs, {active} truncation-active (tol {tol:.0e})"
        ),
    )
}

fn cutoff_contract() -> Outcome {
    let report = check_cutoff(&QuinticCutoff, 10_000);
    outcome(
        report.passed(),
        format!(
            "χ=1 on [0,1]: {}, χ=0 on [2,∞): {}, 0≤χ≤1: {}, sup|χ′| = {:.4}",
            report.ones_on_unit,
            report.zero_past_two,
            report.within_unit_interval,
            report.max_slope
        ),
    )
}

fn split_inequalities() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for p in [2.0, 3.0, 4.0] {
        let split = Nonlinearity::power(p).unwrap().modify().split().unwrap();
        let m = split.m();
        let (mut g2_gap, mut big_g2_gap) = (f64::INFINITY, f64::INFINITY);
        for s in log_scan(SCAN_MIN, SCAN_MAX, SCAN_POINTS) {
            // g₂ = g₁ − g, so round-off scales with g₁.
            g2_gap = g2_gap.min((split.g2(s) - m * s) / (m * s + split.g1(s)));
            big_g2_gap = big_g2_gap
                .min((split.big_g2(s) - 0.5 * m * s * s) / (0.5 * m * s * s + split.big_g1(s)));
        }
        let c_eps = split.epsilon_bound_certificate(0.5).unwrap().c_eps;
        let pass = g2_gap >= -1e-12 && big_g2_gap >= -1e-12 && c_eps.is_finite();
        ok &= pass;
        details.push(format!(
            "p={p}: min rel. slack {:.1e}/{:.1e}, C_ε={c_eps:.4}",
            g2_gap, big_g2_gap
        ));
    }
    outcome(ok, details.join("; "))
}

fn solve(
    q: f64,
    truncation: TruncationLevel,
    grid: &Arc<RadialGrid>,
) -> Result<SolveResult, SolveError> {
    continuation_run(
        &Nonlinearity::power(3.0).unwrap(),
        q,
        truncation,
        grid,
        &SolverSettings::default(),
    )
}

/// `|½∫|∇u|² − 3∫G(u)| / ½∫|∇u|²`, the identity for `q = 0`.
fn pohozaev_q0(u: &RadialFunction) -> f64 {
    let split = cubic_split();
    let half_kinetic = 0.5 * gradient_norm_sq(u);
    let potential = volume_integral(&u.map(|s| split.primitive(s)));
    (half_kinetic - 3.0 * potential).abs() / half_kinetic
}

fn q_zero_reduction(grid: &Arc<RadialGrid>) -> Outcome {
    let oracle = common::shoot_cubic(1e-3).energy();
    match solve(0.0, TruncationLevel::Auto, grid) {
        Ok(res) => {
            let rel = (res.energy_q - oracle).abs() / oracle;
            let poho = pohozaev_q0(&res.u);
            outcome(
                rel <= 1e-2 && poho <= 1e-3 && res.certificate.passed,
                format!(
                    "energy {:.6} vs shooting {oracle:.6} (rel {rel:.2e}, tol 1e-2), Pohozaev {poho:.2e} (tol 1e-3)",
                    res.energy_q
                ),
            )
        }
        Err(e) => outcome(false, format!("solver error: {e}")),
    }
}

fn full_pipeline(grid: &Arc<RadialGrid>) -> Outcome {
    let res = match solve(0.1, TruncationLevel::Auto, grid) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("solver error: {e}")),
    };
    let physical = Functional::new(cubic_split(), 0.1, None).unwrap();
    let grad = physical.gradient_norm(&res.u, 1.0);
    let poho = physical.pohozaev_residual(&res.u, 1.0);
    let trunc = TruncationConfig::new(res.t_level).unwrap();
    let inactive = trunc.k_t(&res.u) == 1.0 && res.alpha_norm <= res.t_level;
    let n = grid.len();
    let interior_min = res.u.values()[..n - 1]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let pde = |name: &str| {
        res.certificate
            .check(name)
            .map_or(f64::INFINITY, |c| c.value)
    };
    let (pde_u, pde_phi) = (pde("pde_residual_u"), pde("pde_residual_phi"));
    let shift = match solve(0.1, TruncationLevel::Fixed(2.0 * res.t_level), grid) {
        Ok(r) => (r.energy_q - res.energy_q).abs(),
        Err(_) => f64::INFINITY,
    };
    outcome(
        grad <= 1e-6 && poho <= 1e-3 && inactive && interior_min > 0.0 && pde_u <= 1e-4 && pde_phi <= 1e-4 && shift <= 1e-8,
        format!(
            "energy {:.8}, |grad| {grad:.1e}, Pohozaev {poho:.1e}, ‖u‖_α/T {:.3}, min u {interior_min:.1e}, \
             PDE {pde_u:.1e}/{pde_phi:.1e}, |ΔE| at 2T {shift:.1e}",
            res.energy_q,
            res.alpha_norm / res.t_level
        ),
    )
}

fn mountain_pass_geometry(grid: &Arc<RadialGrid>) -> Outcome {
    let res = match solve(0.1, TruncationLevel::Auto, grid) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("solver error: {e}")),
    };
    let functional = Functional::new(
        cubic_split(),
        0.1,
        Some(TruncationConfig::new(res.t_level).unwrap()),
    )
    .unwrap();
    let reference = build_path(&res.profile, grid, 24).unwrap();
    let ray = ray_path(&res.u, &functional, 1.0, 24);
    let mut admissible = ray.is_some();
    let mut worst_end = f64::NEG_INFINITY;
    for rec in &res.history {
        let mut paths = vec![&reference];
        if let Some(r) = &ray {
            paths.push(r);
        }
        for path in paths {
            let start = functional.energy(&path[0], rec.lambda).total;
            let end = functional.energy(&path[path.len() - 1], rec.lambda).total;
            worst_end = worst_end.max(end);
            admissible &= start == 0.0 && end < 0.0;
        }
    }
    let floor = res.floor.c_tilde;
    let above_floor = res
        .history
        .iter()
        .all(|r| r.c_lambda > floor && floor > 0.0);
    let monotone = res
        .history
        .windows(2)
        .all(|w| w[1].c_lambda <= w[0].c_lambda + 1e-12 * w[0].c_lambda.abs());
    let levels: Vec<String> = res
        .history
        .iter()
        .map(|r| format!("{:.4}", r.c_lambda))
        .collect();
    outcome(
        admissible && above_floor && monotone,
        format!(
            "endpoint energies ≤ {worst_end:.3}, floor c̃ = {floor:.4}, c_λ = [{}], nonincreasing: {monotone}",
            levels.join(", ")
        ),
    )
}

fn grid_convergence() -> Outcome {
    let energy = |n: usize| {
        let grid = RadialGrid::new(30.0, n).unwrap();
        solve(0.0, TruncationLevel::Auto, &grid).map(|r| r.energy_q)
    };
    let (coarse, doubled) = match (energy(3000), energy(6000)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return outcome(false, "solver failed on the refined grid".into()),
    };
    let change = (doubled - coarse).abs() / coarse.abs();

    let half = RadialGrid::new(30.0, 1500).unwrap();
    let checks = [
        ("identity", poisson_identity(&half, 4e-6)),
        (
            "scaling",
            scaling_law(&RadialGrid::new(10.0, 5_001).unwrap(), 4e-5),
        ),
        (
            "ball",
            unit_ball(&RadialGrid::new(4.0, 2_001).unwrap(), 4e-6),
        ),
        ("gradient", gradient_consistency(&half, 4e-5)),
    ];
    let mut ok = change <= 1e-3;
    let mut failed: Vec<&str> = checks
        .iter()
        .filter(|(_, o)| !o.passed)
        .map(|(n, _)| *n)
        .collect();
    let poho = match solve(0.1, TruncationLevel::Auto, &half) {
        Ok(r) => r.pohozaev_residual,
        Err(_) => f64::INFINITY,
    };
    if poho > 4e-3 {
        failed.push("pohozaev");
    }
    ok &= failed.is_empty();
    outcome(
        ok,
        format!(
            "energy change on doubling {change:.2e} (tol 1e-3); halved-grid Pohozaev {poho:.2e}; failing at 4× tolerance: {}",
            if failed.is_empty() { "none".to_string() } else { failed.join(", ") }
        ),
    )
}

type Criterion<'a> = (u32, &'a str, Duration, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let default_grid = RadialGrid::with_defaults();
    let fine = RadialGrid::new(10.0, 10_001).unwrap();
    let ball = RadialGrid::new(4.0, 4_001).unwrap();

    let criteria: Vec<Criterion> = vec![
        (
            1,
            "Poisson identity",
            Duration::from_secs(1),
            Box::new(|| poisson_identity(&default_grid, 1e-6)),
        ),
        (
            2,
            "scaling law",
            Duration::from_secs(1),
            Box::new(|| scaling_law(&fine, 1e-5)),
        ),
        (
            3,
            "unit-ball closed form",
            Duration::from_secs(1),
            Box::new(|| unit_ball(&ball, 1e-6)),
        ),
        (
            4,
            "gradient consistency",
            Duration::from_secs(10),
            Box::new(|| gradient_consistency(&default_grid, 1e-5)),
        ),
        (
            5,
            "cutoff contract",
            Duration::from_secs(1),
            Box::new(cutoff_contract),
        ),
        (
            6,
            "split inequalities",
            Duration::from_secs(1),
            Box::new(split_inequalities),
        ),
        (
            7,
            "q = 0 reduction",
            Duration::from_secs(60),
            Box::new(|| q_zero_reduction(&default_grid)),
        ),
        (
            8,
            "full pipeline",
            Duration::from_secs(300),
            Box::new(|| full_pipeline(&default_grid)),
        ),
        (
            9,
            "mountain-pass geometry",
            Duration::from_secs(30),
            Box::new(|| mountain_pass_geometry(&default_grid)),
        ),
        (
            10,
            "grid convergence",
            Duration::from_secs(600),
            Box::new(grid_convergence),
        ),
    ];

    let mut failures = 0;
    for (id, name, budget, run) in &criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let ok = result.passed && elapsed <= *budget;
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {id:>2} [{name}]: {} {} ({:.2} s, budget {} s)",
            if ok { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        eprintln!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
