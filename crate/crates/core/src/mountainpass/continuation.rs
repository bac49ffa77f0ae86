use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::certify::{certify, Certificate, Tolerances};
use super::path::{
    build_path, build_reference_profile, minimax_level, ray_path, splice_path, LevelFloor,
    ReferenceProfile,
};
use super::refine::{deform_and_refine, newton_refine, ray_peak, RefineSettings};
use super::{ContinuationState, LambdaRecord};
use crate::error::SolverError;
use crate::functional::{EnergyBreakdown, Functional, TruncationConfig};
use crate::grid::{norm_ls, RadialFunction, RadialGrid};
use crate::nonlinearity::Nonlinearity;
use crate::poisson::{solve_poisson, PoissonField};
use crate::ALPHA;

/// Stands in for `T = ∞` when the coupling vanishes and `T` is automatic.
const UNBOUNDED_T: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TruncationLevel {
    /// `T = 2‖u₀‖_α` with `u₀` the `q = 0` solution.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverSettings {
    /// Schedule depth `K`: `λ_k = 1 − (1−δ̄)2^{−k}`, `k = 0..=K`.
    pub depth: usize,
    pub path_points: usize,
    pub floor_eps: f64,
    pub refine: RefineSettings,
    pub tolerances: Tolerances,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            depth: 8,
            path_points: 24,
            floor_eps: 0.5,
            refine: RefineSettings::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: RadialFunction,
    pub phi: PoissonField,
    /// `I_q(u)`, untruncated, `λ = 1`.
    pub energy_q: f64,
    pub energy: EnergyBreakdown,
    pub grad_residual: f64,
    pub pohozaev_residual: f64,
    /// Pohozaev residual of the truncated functional with the dilation
    /// coefficient on the cutoff term; equals the above when `k_T = 1`.
    pub pohozaev_dilation: f64,
    pub alpha_norm: f64,
    pub t_level: f64,
    pub k_t: f64,
    pub truncation_active: bool,
    pub positivity: f64,
    pub lambda_final: f64,
    pub q: f64,
    pub profile: ReferenceProfile,
    pub floor: LevelFloor,
    pub history: Vec<LambdaRecord>,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error(transparent)]
    Setup(#[from] SolverError),
    #[error("truncation active: increase T or decrease q (‖u‖_α = {:.6}, T = {:.6})", .0.alpha_norm, .0.t_level)]
    TruncationActive(Box<SolveResult>),
    #[error("{}", no_convergence_message(*.q))]
    NoConvergence { q: f64, history: Vec<LambdaRecord> },
}

impl SolveError {
    pub fn history(&self) -> &[LambdaRecord] {
        match self {
            SolveError::Setup(_) => &[],
            SolveError::TruncationActive(r) => &r.history,
            SolveError::NoConvergence { history, .. } => history,
        }
    }
}

fn no_convergence_message(q: f64) -> String {
    let base = "no λ in the schedule produced a converged critical point";
    if q > 0.0 {
        format!("{base}: q = {q} may lie beyond the coupling range reachable at this T (increase T or decrease q)")
    } else {
        base.to_string()
    }
}

/// Mountain-pass continuation in `λ` followed by a Newton solve of the
/// untruncated problem at `λ = 1`.
pub fn continuation_run(
    nl: &Nonlinearity,
    q: f64,
    truncation: TruncationLevel,
    grid: &Arc<RadialGrid>,
    settings: &SolverSettings,
) -> Result<SolveResult, SolveError> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(SolverError::InvalidCoupling(q).into());
    }
    if q == 0.0 {
        let t = match truncation {
            TruncationLevel::Fixed(t) => t,
            TruncationLevel::Auto => UNBOUNDED_T,
        };
        let mut res = run_fixed(nl, 0.0, t, grid, settings, None)?;
        if truncation == TruncationLevel::Auto {
            res.t_level = 2.0 * res.alpha_norm;
        }
        return Ok(res);
    }
    // The q = 0 ground state fixes the automatic T and seeds the first path.
    let base = run_fixed(nl, 0.0, UNBOUNDED_T, grid, settings, None)?;
    let t_level = match truncation {
        TruncationLevel::Fixed(t) => t,
        TruncationLevel::Auto => {
            log::info!("auto T = {:.6}", 2.0 * base.alpha_norm);
            2.0 * base.alpha_norm
        }
    };
    run_fixed(nl, q, t_level, grid, settings, Some(&base.u))
}

/// Lowest ray peak over the dilations `u(·/θ)`, `θ = 1.15^k`, preferring
/// peaks where the cutoff is inactive. The Coulomb term grows like `θ²`
/// relative to the quartic one, so for larger couplings rays through the
/// undilated seed peak on the cutoff wall while concentrated ones do not.
fn seed_peak(functional: &Functional, u: &RadialFunction, lambda: f64) -> Option<RadialFunction> {
    let grid = u.grid();
    // (cutoff active, energy, peak); inactive peaks sort first.
    let mut best: Option<(bool, f64, RadialFunction)> = None;
    for k in -8..=8 {
        let theta = 1.15f64.powi(k);
        let Ok(dilated) = RadialFunction::from_fn(grid, |r| u.sample(r / theta)) else {
            continue;
        };
        let Some((_, peak)) = ray_peak(functional, &dilated, lambda) else {
            continue;
        };
        let active = functional.k_t(&peak) < 1.0;
        let e = functional.energy(&peak, lambda).total;
        let better = match &best {
            None => true,
            Some((b_active, b_e, _)) => (active, e) < (*b_active, *b_e),
        };
        if better {
            best = Some((active, e, peak));
        }
    }
    best.map(|(_, _, peak)| peak)
}

fn run_fixed(
    nl: &Nonlinearity,
    q: f64,
    t_level: f64,
    grid: &Arc<RadialGrid>,
    settings: &SolverSettings,
    seed: Option<&RadialFunction>,
) -> Result<SolveResult, SolveError> {
    let split = nl.modify().split().map_err(SolverError::from)?;
    let trunc = TruncationConfig::new(t_level)?;
    let functional = Functional::new(split.clone(), q, Some(trunc.clone()))?;
    let floor = LevelFloor::new(&split, settings.floor_eps)?;
    let profile = build_reference_profile(&functional, grid)?;
    let end = profile.endpoint(grid).map_err(SolverError::from)?;
    let m = settings.path_points;
    let path = build_path(&profile, grid, m)?;
    let delta_bar = profile.delta_bar;
    let first = minimax_level(&path, &functional, delta_bar, &floor)?;
    let mut state = ContinuationState {
        lambda: delta_bar,
        path,
        c_lambda: first.level,
        iterate: None,
        grad_norm: f64::INFINITY,
        converged: false,
        sweeps: 0,
        floor,
        history: Vec::new(),
    };
    // A seed replaces the reference path by the best ray through one of its
    // dilations; the ray peak becomes the first iterate.
    let mut warm: Option<RadialFunction> = None;
    if let Some(peak) = seed.and_then(|u| seed_peak(&functional, u, delta_bar)) {
        if let Some(ray) = ray_path(&peak, &functional, delta_bar, m) {
            if let Ok(lvl) = minimax_level(&ray, &functional, delta_bar, &floor) {
                state.path = ray;
                state.c_lambda = lvl.level;
                warm = Some(peak);
            }
        }
    }
    let mut last_good: Option<RadialFunction> = None;
    for k in 0..=settings.depth {
        let lambda = 1.0 - (1.0 - delta_bar) * 0.5f64.powi(k as i32);
        state.lambda = lambda;
        // Every path admissible at λ_{k−1} stays admissible and its maximum
        // can only drop as λ grows, so the running minimum is an upper bound.
        if let Some(u) = &last_good {
            if let Some(ray) = ray_path(u, &functional, lambda, m) {
                if let Some((_, peak)) = ray_peak(&functional, u, lambda) {
                    state.c_lambda = state.c_lambda.min(functional.energy(&peak, lambda).total);
                }
                state.path = ray;
            } else {
                let spliced = splice_path(u, &end, m)?;
                if let Ok(lvl) = minimax_level(&spliced, &functional, lambda, &floor) {
                    state.path = spliced;
                    state.c_lambda = state.c_lambda.min(lvl.level);
                }
            }
        }
        state.iterate = last_good.clone().or_else(|| warm.take());
        state = deform_and_refine(state, &functional, &settings.refine);
        let (critical_energy, pohozaev) = match (&state.iterate, state.converged) {
            (Some(u), true) => (
                Some(functional.energy(u, lambda).total),
                Some(functional.pohozaev_residual(u, lambda)),
            ),
            _ => (None, None),
        };
        let record = LambdaRecord {
            lambda,
            c_lambda: state.c_lambda,
            critical_energy,
            grad_norm: state.grad_norm,
            pohozaev,
            floor: floor.c_tilde,
            sweeps: state.sweeps,
            converged: state.converged,
        };
        log::info!(
            "λ = {lambda:.6}: c = {:.6}, |grad| = {:.3e}, sweeps = {}, converged = {}",
            record.c_lambda,
            record.grad_norm,
            record.sweeps,
            record.converged
        );
        state.history.push(record);
        if state.converged {
            last_good = state.iterate.clone();
        }
    }

    let start = match last_good {
        Some(u) => u,
        None => {
            return Err(SolveError::NoConvergence {
                q,
                history: state.history,
            })
        }
    };
    let physical = functional.untruncated();
    let tol = settings.tolerances.grad.min(settings.refine.tol_grad);
    let out = newton_refine(&physical, &start, 1.0, tol, settings.refine.newton_max_iter);
    let final_energy = physical.energy(&out.u, 1.0);
    state.history.push(LambdaRecord {
        lambda: 1.0,
        c_lambda: state.c_lambda.min(final_energy.total),
        critical_energy: out.converged.then_some(final_energy.total),
        grad_norm: out.grad_norm,
        pohozaev: Some(physical.pohozaev_residual(&out.u, 1.0)),
        floor: floor.c_tilde,
        sweeps: 0,
        converged: out.converged,
    });
    if !out.converged || out.u.max_abs() <= 1e-6 {
        return Err(SolveError::NoConvergence {
            q,
            history: state.history,
        });
    }

    let u = out.u;
    let alpha_norm = norm_ls(&u, ALPHA).map_err(SolverError::from)?;
    let k_t = trunc.k_t(&u);
    let truncation_active = q > 0.0 && (k_t < 1.0 || alpha_norm > t_level);
    let n = grid.len();
    let positivity = u.values()[..n - 1]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let certificate = certify(&u, &split, q, &settings.tolerances);
    let result = SolveResult {
        phi: solve_poisson(&u, q),
        energy_q: final_energy.physical,
        energy: final_energy,
        grad_residual: out.grad_norm,
        pohozaev_residual: physical.pohozaev_residual(&u, 1.0),
        pohozaev_dilation: functional.pohozaev_residual_dilation(&u, 1.0),
        alpha_norm,
        t_level,
        k_t,
        truncation_active,
        positivity,
        lambda_final: 1.0,
        q,
        profile,
        floor,
        history: state.history,
        certificate,
        u,
    };
    if truncation_active {
        return Err(SolveError::TruncationActive(Box::new(result)));
    }
    Ok(result)
}
