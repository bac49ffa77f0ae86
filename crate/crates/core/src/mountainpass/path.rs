use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GridError, SolverError};
use crate::functional::Functional;
use crate::grid::{RadialFunction, RadialGrid};
use crate::nonlinearity::SplitNonlinearity;

/// Best constant in `S‖u‖₆² ≤ ‖∇u‖₂²` on ℝ³.
pub const SOBOLEV_CONSTANT: f64 = 5.477_904_089_531_331;

/// Plateau `z = ζ` on `[0, R_z]` falling linearly to zero on `[R_z, R_z + 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceProfile {
    pub zeta: f64,
    pub plateau: f64,
    pub delta_bar: f64,
    pub theta_bar: f64,
    /// `∫G(z)`, `∫G₁(z)`, `∫G₂(z)` on the grid.
    pub primitive_integral: f64,
    pub g1_integral: f64,
    pub g2_integral: f64,
}

impl ReferenceProfile {
    pub fn eval(&self, r: f64) -> f64 {
        plateau_profile(self.zeta, self.plateau, r)
    }

    /// Samples `z(·/θ)`.
    pub fn dilated(&self, grid: &Arc<RadialGrid>, theta: f64) -> Result<RadialFunction, GridError> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(GridError::InvalidScale(theta));
        }
        if theta == 0.0 {
            return Ok(RadialFunction::zeros(grid));
        }
        let reach = theta * (self.plateau + 1.0);
        if reach > grid.r_max() * (1.0 + 1e-12) {
            return Err(GridError::SupportOverflow {
                reach,
                r_max: grid.r_max(),
            });
        }
        RadialFunction::from_fn(grid, |r| self.eval(r / theta))
    }

    pub fn endpoint(&self, grid: &Arc<RadialGrid>) -> Result<RadialFunction, GridError> {
        self.dilated(grid, self.theta_bar)
    }
}

fn plateau_profile(zeta: f64, plateau: f64, r: f64) -> f64 {
    if r <= plateau {
        zeta
    } else if r < plateau + 1.0 {
        zeta * (plateau + 1.0 - r)
    } else {
        0.0
    }
}

/// Grows the plateau in steps of ½ until `∫G(z) > 0`, then picks `δ̄` and
/// scans `θ` (factor 1.05) until `I_{q,δ̄}^T(z(·/θ)) < 0`, with a 20%
/// margin on `θ̄`.
pub fn build_reference_profile(
    functional: &Functional,
    grid: &Arc<RadialGrid>,
) -> Result<ReferenceProfile, SolverError> {
    let split = functional.split();
    let zeta = split
        .nonlinearity()
        .zeta()
        .ok_or(crate::error::NonlinearityError::NoPositivePrimitive)?;
    // Smallest plateau with ∫G(z) > 0 whose dilations reach negative
    // energy inside the grid.
    let mut plateau = 0.5;
    let (mut profile, theta, theta_max) = loop {
        if plateau + 1.0 > 0.5 * grid.r_max() {
            return Err(SolverError::ReferenceProfile);
        }
        let z = RadialFunction::from_fn(grid, |r| plateau_profile(zeta, plateau, r))?;
        let (big_g, big_g1, big_g2) = primitive_integrals(split, &z);
        if big_g <= 0.0 {
            plateau += 0.5;
            continue;
        }
        let profile = ReferenceProfile {
            zeta,
            plateau,
            delta_bar: 0.5 * (big_g2 / big_g1 + 1.0),
            theta_bar: 1.0,
            primitive_integral: big_g,
            g1_integral: big_g1,
            g2_integral: big_g2,
        };
        let theta_max = grid.r_max() / (plateau + 1.0);
        let mut theta = 1.0;
        while theta <= theta_max {
            let z = profile.dilated(grid, theta)?;
            if functional.energy(&z, profile.delta_bar).total < 0.0 {
                break;
            }
            theta *= 1.05;
        }
        if theta <= theta_max {
            break (profile, theta, theta_max);
        }
        plateau += 0.5;
    };
    let delta_bar = profile.delta_bar;
    profile.theta_bar = (1.2 * theta).min(theta_max);
    let end = profile.endpoint(grid)?;
    let e_end = functional.energy(&end, delta_bar).total;
    if e_end >= 0.0 {
        return Err(SolverError::PathNotAdmissible(e_end));
    }
    Ok(profile)
}

fn primitive_integrals(split: &SplitNonlinearity, z: &RadialFunction) -> (f64, f64, f64) {
    let mass = z.grid().mass();
    let (mut g, mut g1, mut g2) = (0.0, 0.0, 0.0);
    for (m, &v) in mass.iter().zip(z.values()) {
        g += m * split.primitive(v);
        g1 += m * split.big_g1(v);
        g2 += m * split.big_g2(v);
    }
    (g, g1, g2)
}

/// `path[i] = z(·/(θ̄ t_i))`, `t_i = i/(M−1)`.
pub fn build_path(
    profile: &ReferenceProfile,
    grid: &Arc<RadialGrid>,
    points: usize,
) -> Result<Vec<RadialFunction>, SolverError> {
    if points < 3 {
        return Err(SolverError::PathTooShort(points));
    }
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            profile
                .dilated(grid, profile.theta_bar * t)
                .map_err(SolverError::from)
        })
        .collect()
}

/// Polyline `0 → u → end` resampled at `points` equal H¹-arclength nodes.
pub fn splice_path(
    u: &RadialFunction,
    end: &RadialFunction,
    points: usize,
) -> Result<Vec<RadialFunction>, SolverError> {
    if points < 3 {
        return Err(SolverError::PathTooShort(points));
    }
    let zero = RadialFunction::zeros(u.grid());
    Ok(resample(&[zero, u.clone(), end.clone()], points))
}

/// Ray path `t ↦ t·u` from 0 through `u` (a node) to the first
/// `t_end ∈ {2, 4, …, 256}` with `I_λ(t_end u) < 0`.
pub fn ray_path(
    u: &RadialFunction,
    functional: &Functional,
    lambda: f64,
    points: usize,
) -> Option<Vec<RadialFunction>> {
    if points < 3 {
        return None;
    }
    let mut t_end = 2.0;
    while functional.energy(&u.scaled(t_end), lambda).total >= 0.0 {
        t_end *= 2.0;
        if t_end > 256.0 {
            return None;
        }
    }
    let last = points - 1;
    let k_one = ((last as f64 / t_end).round() as usize).clamp(1, last - 1);
    Some(
        (0..points)
            .map(|k| {
                let t = if k <= k_one {
                    k as f64 / k_one as f64
                } else {
                    1.0 + (t_end - 1.0) * (k - k_one) as f64 / (last - k_one) as f64
                };
                u.scaled(t)
            })
            .collect(),
    )
}

/// Resamples a polyline at `points` nodes equally spaced in H¹ arclength.
/// The first and last vertices are kept exactly.
pub(crate) fn resample(poly: &[RadialFunction], points: usize) -> Vec<RadialFunction> {
    let mut cum = vec![0.0];
    for w in poly.windows(2) {
        let d = w[1].add_scaled(-1.0, &w[0]);
        let len = crate::grid::norm_h1(&d);
        cum.push(cum.last().unwrap() + len);
    }
    let total = *cum.last().unwrap();
    if total == 0.0 || points < 2 {
        return vec![poly[0].clone(); points.max(1)];
    }
    let mut out = Vec::with_capacity(points);
    let mut seg = 0;
    for k in 0..points {
        if k == 0 {
            out.push(poly[0].clone());
            continue;
        }
        if k == points - 1 {
            out.push(poly[poly.len() - 1].clone());
            continue;
        }
        let target = total * k as f64 / (points - 1) as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let s = if span > 0.0 {
            (target - cum[seg]) / span
        } else {
            0.0
        };
        let d = poly[seg + 1].add_scaled(-1.0, &poly[seg]);
        out.push(poly[seg].add_scaled(s, &d));
    }
    out
}

/// Lower bound for every mountain-pass level on `λ ∈ [δ̄, 1]`. From
/// `I ≥ κ‖u‖² − c‖u‖⁶` with `κ = min(½, (1−ε)m/2)` and `c = C_ε/(6S³)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelFloor {
    pub eps: f64,
    pub c_eps: f64,
    pub kappa: f64,
    /// Radius of the sphere on which `I ≥ c̃`.
    pub rho: f64,
    pub c_tilde: f64,
}

impl LevelFloor {
    pub fn new(split: &SplitNonlinearity, eps: f64) -> Result<Self, SolverError> {
        let cert = split.epsilon_bound_certificate(eps)?;
        let kappa = 0.5_f64.min((1.0 - eps) * split.m() / 2.0);
        let c = cert.c_eps / (6.0 * SOBOLEV_CONSTANT.powi(3));
        let (rho, c_tilde) = if c > 0.0 {
            let x = (kappa / (3.0 * c)).sqrt();
            (x.sqrt(), 2.0 / 3.0 * kappa * x)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Ok(Self {
            eps,
            c_eps: cert.c_eps,
            kappa,
            rho,
            c_tilde,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxLevel {
    /// `max_i I_λ(path[i])`, an upper bound for `c_λ`.
    pub level: f64,
    pub index: usize,
    pub floor: f64,
}

pub(crate) fn path_energies(
    path: &[RadialFunction],
    functional: &Functional,
    lambda: f64,
) -> Vec<f64> {
    path.par_iter()
        .map(|u| functional.energy(u, lambda).total)
        .collect()
}

pub fn minimax_level(
    path: &[RadialFunction],
    functional: &Functional,
    lambda: f64,
    floor: &LevelFloor,
) -> Result<MinimaxLevel, SolverError> {
    if path.len() < 3 {
        return Err(SolverError::PathTooShort(path.len()));
    }
    let energies = path_energies(path, functional, lambda);
    let last = energies[energies.len() - 1];
    if last.is_nan() || last >= 0.0 {
        return Err(SolverError::PathNotAdmissible(last));
    }
    let (index, level) =
        energies
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, e)| if e > acc.1 { (i, e) } else { acc },
            );
    Ok(MinimaxLevel {
        level,
        index,
        floor: floor.c_tilde,
    })
}
