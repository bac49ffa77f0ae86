use rayon::prelude::*;
use serde::Serialize;

use super::path::{path_energies, ray_path, resample, splice_path};
use super::ContinuationState;
use crate::functional::{riesz_and_norm, Functional};
use crate::grid::RadialFunction;
use crate::linalg::gmres;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RefineSettings {
    /// Target H¹ norm of the gradient.
    pub tol_grad: f64,
    pub max_sweeps: usize,
    /// Newton is attempted every this many sweeps, and whenever the
    /// climbing point's gradient falls below `newton_switch`.
    pub newton_every: usize,
    pub newton_switch: f64,
    pub newton_max_iter: usize,
    /// Cap on ray-peak descent steps before each Newton attempt.
    pub descent_max_iter: usize,
    /// A λ step is abandoned after this many sweeps without the level
    /// estimate dropping.
    pub stall_sweeps: usize,
}

impl Default for RefineSettings {
    fn default() -> Self {
        Self {
            tol_grad: 1e-8,
            max_sweeps: 400,
            newton_every: 10,
            newton_switch: 1e-2,
            newton_max_iter: 40,
            descent_max_iter: 200,
            stall_sweeps: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: RadialFunction,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `G⁻¹H x`: the Hessian applied to `x` by a central difference of the
/// nodal gradient, mapped back through the H¹ Riesz map.
fn hessian_apply(functional: &Functional, u: &RadialFunction, lambda: f64, x: &[f64]) -> Vec<f64> {
    let grid = u.grid();
    let xf = RadialFunction::from_raw(grid, x.to_vec());
    let size = xf.max_abs();
    if size == 0.0 {
        return vec![0.0; x.len()];
    }
    let eps = 1e-6 * u.max_abs().max(1.0) / size;
    let plus = functional.dual_gradient(&u.add_scaled(eps, &xf), lambda);
    let minus = functional.dual_gradient(&u.add_scaled(-eps, &xf), lambda);
    let diff: Vec<f64> = plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect();
    grid.riesz_from_dual(&diff)
}

/// Jacobian-free Newton–Krylov on `I'_λ(u) = 0`. GMRES runs on the
/// H¹-preconditioned system in the H¹ inner product, and the step is
/// backtracked on `‖∇I‖_{H¹}`.
pub fn newton_refine(
    functional: &Functional,
    u0: &RadialFunction,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> NewtonOutcome {
    let grid = u0.grid().clone();
    let mut u = u0.clone();
    let (mut w, mut gn) = riesz_and_norm(&u, &functional.dual_gradient(&u, lambda));
    let mut iterations = 0;
    while gn > tol && iterations < max_iter {
        iterations += 1;
        let apply = |x: &[f64]| hessian_apply(functional, &u, lambda, x);
        let dot = |a: &[f64], b: &[f64]| grid.h1_inner(a, b);
        let forcing = (0.1 * gn).clamp(1e-10, 1e-2);
        let krylov = gmres(apply, dot, w.values(), forcing, 300);
        let step = RadialFunction::from_raw(&grid, krylov.solution);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = u.add_scaled(-alpha, &step);
            let (tw, tgn) = riesz_and_norm(&trial, &functional.dual_gradient(&trial, lambda));
            if tgn.is_finite() && tgn < (1.0 - 1e-4 * alpha) * gn {
                u = trial;
                w = tw;
                gn = tgn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome {
        converged: gn <= tol,
        u,
        grad_norm: gn,
        iterations,
    }
}

/// Maximiser of `t ↦ I_λ(t v)` over `t > 0`, by bisection on the
/// derivative. `None` when the ray has no interior maximum.
pub fn ray_peak(
    functional: &Functional,
    v: &RadialFunction,
    lambda: f64,
) -> Option<(f64, RadialFunction)> {
    let slope = |t: f64| -> f64 {
        let d = functional.dual_gradient(&v.scaled(t), lambda);
        d.iter().zip(v.values()).map(|(a, b)| a * b).sum()
    };
    let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
    let mut f_lo = slope(1.0);
    let mut f_hi = f_lo;
    if f_lo > 0.0 {
        while f_hi > 0.0 {
            (lo, f_lo) = (hi, f_hi);
            hi *= 2.0;
            if hi > 1e12 {
                return None;
            }
            f_hi = slope(hi);
        }
    } else {
        while f_lo <= 0.0 {
            (hi, f_hi) = (lo, f_lo);
            lo *= 0.5;
            if lo < 1e-12 {
                return None;
            }
            f_lo = slope(lo);
        }
    }
    // Illinois regula falsi on the sign change of the slope.
    let mut side = 0;
    for _ in 0..100 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let f_mid = slope(mid);
        if f_mid == 0.0 {
            return Some((mid, v.scaled(mid)));
        }
        if f_mid > 0.0 {
            (lo, f_lo) = (mid, f_mid);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            (hi, f_hi) = (mid, f_mid);
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        if (f_lo - f_hi).abs() <= 1e-14 * f_lo.abs().max(f_hi.abs()) {
            break;
        }
    }
    let t = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    Some((t, v.scaled(t)))
}

/// Descent along the ray-peak set: each iterate sits at the energy
/// maximum of its ray from 0 and moves down the gradient with an Armijo
/// step. Stops once `‖∇I‖_{H¹} ≤ target`.
pub fn ray_descent(
    functional: &Functional,
    start: &RadialFunction,
    lambda: f64,
    target: f64,
    max_iter: usize,
) -> Option<(RadialFunction, f64)> {
    let (_, mut u) = ray_peak(functional, start, lambda)?;
    let mut e = functional.energy(&u, lambda).total;
    let (mut w, mut gn) = functional.gradient_and_norm(&u, lambda);
    let mut s = 1.0_f64;
    for _ in 0..max_iter {
        if gn <= target {
            break;
        }
        let mut moved = false;
        for _ in 0..30 {
            let trial_dir = u.add_scaled(-s, &w);
            if let Some((_, trial)) = ray_peak(functional, &trial_dir, lambda) {
                let te = functional.energy(&trial, lambda).total;
                if te <= e - 1e-4 * s * gn * gn {
                    u = trial;
                    e = te;
                    moved = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !moved {
            break;
        }
        s = (s * 2.0).min(4.0);
        let next = functional.gradient_and_norm(&u, lambda);
        w = next.0;
        gn = next.1;
    }
    Some((u, gn))
}

/// Alternates climbing-string sweeps over the path with Newton refinement
/// from the path maximiser until the gradient at the candidate drops below
/// `tol_grad` or `max_sweeps` is exhausted.
pub fn deform_and_refine(
    mut state: ContinuationState,
    functional: &Functional,
    settings: &RefineSettings,
) -> ContinuationState {
    let lambda = state.lambda;
    state.sweeps = 0;
    if let Some(u) = &state.iterate {
        let gn = functional.gradient_norm(u, lambda);
        let e = functional.energy(u, lambda).total;
        if gn <= settings.tol_grad && e >= 0.5 * state.floor.c_tilde {
            state.grad_norm = gn;
            state.converged = true;
            return state;
        }
    }
    state.converged = false;
    let n_pts = state.path.len();
    let end = state.path[n_pts - 1].clone();

    let try_newton = |state: &mut ContinuationState, start: &RadialFunction| -> bool {
        let out = newton_refine(
            functional,
            start,
            lambda,
            settings.tol_grad,
            settings.newton_max_iter,
        );
        if !out.converged {
            log::debug!("newton at λ={lambda:.6} stalled at {:.3e}", out.grad_norm);
            return false;
        }
        let e = functional.energy(&out.u, lambda).total;
        let nontrivial = out.u.max_abs() > 1e-6 && e >= 0.5 * state.floor.c_tilde;
        // Sampled path maxima sit slightly below the true pass, so only
        // points far above it (excited states) are rejected.
        let near_pass = e <= 1.25 * state.c_lambda.abs();
        if !(nontrivial && near_pass) {
            log::debug!("newton at λ={lambda:.6} reached a rejected point, energy {e:.6}");
            return false;
        }
        // A critical point is the peak of its own ray, so the ray's
        // maximum is exactly `e`.
        if let Some(ray) = ray_path(&out.u, functional, lambda, n_pts) {
            state.path = ray;
            state.c_lambda = e;
        } else if let Ok(path) = splice_path(&out.u, &end, n_pts) {
            let energies = path_energies(&path, functional, lambda);
            if energies[n_pts - 1] < 0.0 {
                state.c_lambda = state.c_lambda.min(energies[argmax(&energies)]);
                state.path = path;
            }
        }
        state.iterate = Some(out.u);
        state.grad_norm = out.grad_norm;
        state.converged = true;
        true
    };

    if let Some(u) = state.iterate.clone() {
        if try_newton(&mut state, &u) {
            return state;
        }
    }

    let mut steps = vec![1.0_f64; n_pts];
    let (mut best, mut last_gain) = (f64::INFINITY, 0);
    for sweep in 0..settings.max_sweeps {
        state.sweeps = sweep + 1;
        let mut energies = path_energies(&state.path, functional, lambda);
        if let Some(short) = shorten(&state.path, &energies) {
            state.path = short;
            energies = path_energies(&state.path, functional, lambda);
        }
        let ci = argmax(&energies);
        let grads: Vec<(RadialFunction, f64)> = state
            .path
            .par_iter()
            .map(|u| functional.gradient_and_norm(u, lambda))
            .collect();

        // Descend everything except the two ends; points past the ridge
        // that are already below zero stay put.
        let updates: Vec<(usize, RadialFunction, f64)> = (1..n_pts - 1)
            .into_par_iter()
            .filter(|&k| !(k > ci && energies[k] <= 0.0))
            .map(|k| {
                let (g, gn) = &grads[k];
                let u = &state.path[k];
                let mut tau = (steps[k] * 1.5).min(1.0);
                for _ in 0..12 {
                    let trial = u.add_scaled(-tau, g);
                    let e = functional.energy(&trial, lambda).total;
                    if e <= energies[k] - 1e-4 * tau * gn * gn {
                        return (k, trial, tau);
                    }
                    tau *= 0.5;
                }
                (k, u.clone(), tau)
            })
            .collect();
        for (k, u, tau) in updates {
            state.path[k] = u;
            steps[k] = tau;
        }

        state.path = resample(&state.path, n_pts);

        let energies = path_energies(&state.path, functional, lambda);
        if energies[n_pts - 1] >= 0.0 {
            log::warn!("path lost admissibility at λ={lambda:.6}");
            break;
        }
        let ci = argmax(&energies);
        // Every admissible path crosses the floor, so a lower maximum means
        // the samples straddle the ridge.
        if energies[ci] < state.floor.c_tilde {
            log::debug!(
                "path under-resolved at λ={lambda:.6}: maximum {:.6} below the floor",
                energies[ci]
            );
            break;
        }
        if energies[ci] < best * (1.0 - 1e-9) {
            best = energies[ci];
            last_gain = sweep;
        } else if sweep - last_gain >= settings.stall_sweeps {
            log::debug!("level stalled at λ={lambda:.6} after {} sweeps", sweep + 1);
            break;
        }
        if ci == 0 || ci == n_pts - 1 {
            continue;
        }
        state.c_lambda = state.c_lambda.min(energies[ci]);
        let gn = functional.gradient_norm(&state.path[ci], lambda);
        state.grad_norm = gn;
        if gn <= settings.tol_grad && energies[ci] >= 0.5 * state.floor.c_tilde {
            state.iterate = Some(state.path[ci].clone());
            state.converged = true;
            return state;
        }
        if gn < settings.newton_switch || (sweep + 1) % settings.newton_every == 0 {
            let peak = state.path[ci].clone();
            if local_refine(&mut state, &peak, &try_newton, functional, settings) {
                return state;
            }
        }
    }
    state
}

/// Ray-peak descent in growing chunks from `start`, with a Newton attempt
/// after each chunk.
fn local_refine(
    state: &mut ContinuationState,
    start: &RadialFunction,
    try_newton: &dyn Fn(&mut ContinuationState, &RadialFunction) -> bool,
    functional: &Functional,
    settings: &RefineSettings,
) -> bool {
    let lambda = state.lambda;
    let mut u = start.clone();
    let mut spent = 0;
    for chunk in [2usize, 8, 30, 120] {
        let chunk = chunk.min(settings.descent_max_iter.saturating_sub(spent));
        if chunk == 0 {
            break;
        }
        spent += chunk;
        let Some((next, gn)) = ray_descent(functional, &u, lambda, settings.tol_grad, chunk) else {
            return false;
        };
        log::debug!("ray descent at λ={lambda:.6}: {spent} steps, |grad| {gn:.3e}");
        u = next;
        if try_newton(state, &u) {
            return true;
        }
    }
    false
}

/// Cuts the path at the first negative-energy point past the maximum and
/// resamples; the shorter path is still admissible.
fn shorten(path: &[RadialFunction], energies: &[f64]) -> Option<Vec<RadialFunction>> {
    let ci = argmax(energies);
    let j = (ci + 1..energies.len()).find(|&j| energies[j] < 0.0)?;
    (j < path.len() - 1).then(|| resample(&path[..=j], path.len()))
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &e)| if e > acc.1 { (i, e) } else { acc },
        )
        .0
}
