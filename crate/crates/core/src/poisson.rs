//! The reduction map `u ↦ φ_u`, `−Δφ = q u²` on ℝ³.
//!
//! The radial Newton kernel gives
//! `φ(r) = q[(1/r)∫_0^r s²u² ds + ∫_r^∞ s u² ds]`, evaluated with the grid's
//! trapezoid weights through two cumulative sums. With `v = rφ` this is
//! exactly the discrete Green's function of the grid stiffness operator
//! (Dirichlet `v(0) = 0`, natural condition at `r_max`), so
//! `‖φ‖²_{D^{1,2}} = q∫φu²` holds to round-off on every grid.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::GridError;
use crate::grid::{ls_power, RadialFunction, RadialGrid};
use crate::ALPHA;

#[derive(Debug, Clone)]
pub struct PoissonField {
    phi: Vec<f64>,
    grid: Arc<RadialGrid>,
    pub d12_norm_sq: f64,
    /// `∫_{ℝ³} φ_u u²`.
    pub interaction: f64,
    pub q: f64,
}

impl PoissonField {
    /// Nodal values of `φ_u`. The outer node carries the far-field value,
    /// not zero.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `φ_u(r)`; beyond `r_max` the exact exterior field `φ(R)·R/r`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let r_max = self.grid.r_max();
        let n = self.phi.len();
        if r >= r_max {
            return self.phi[n - 1] * r_max / r;
        }
        let h = self.grid.step();
        let x = r / h;
        let base = (x.floor() as isize).min(n as isize - 2);
        let t = x - base as f64;
        let at = |j: isize| -> f64 {
            let j = j.unsigned_abs();
            if j >= n {
                let rj = j as f64 * h;
                self.phi[n - 1] * r_max / rj
            } else {
                self.phi[j]
            }
        };
        let (pm1, p0, p1, p2) = (at(base - 1), at(base), at(base + 1), at(base + 2));
        pm1 * (-t * (t - 1.0) * (t - 2.0) / 6.0)
            + p0 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0)
            + p1 * (-(t + 1.0) * t * (t - 2.0) / 2.0)
            + p2 * ((t + 1.0) * t * (t - 1.0) / 6.0)
    }

    /// `lim r·φ(r) = q‖u‖₂²/(4π)` read off at the outer node.
    pub fn far_field_charge(&self) -> f64 {
        self.phi[self.phi.len() - 1] * self.grid.r_max()
    }
}

/// Newton potential of the density `rho` with unit coupling:
/// `Σ_j w_j r_j² ρ_j / max(r_i, r_j)`.
pub(crate) fn newton_potential(grid: &RadialGrid, rho: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let r = grid.nodes();
    let w = grid.weights();
    // inner_i = Σ_{j≤i} w_j r_j² ρ_j, outer_i = Σ_{j>i} w_j r_j ρ_j
    let mut outer = vec![0.0; n];
    for i in (0..n - 1).rev() {
        outer[i] = outer[i + 1] + w[i + 1] * r[i + 1] * rho[i + 1];
    }
    let mut phi = vec![0.0; n];
    let mut inner = 0.0;
    for i in 0..n {
        inner += w[i] * r[i] * r[i] * rho[i];
        let near = if r[i] > 0.0 { inner / r[i] } else { 0.0 };
        phi[i] = near + outer[i];
    }
    phi
}

/// `∫|∇φ|²` over ℝ³ from nodal `φ`, through `v = rφ`. The exterior tail
/// `∫_R^∞` is included exactly because `v` is constant there.
pub(crate) fn d12_norm_sq(grid: &RadialGrid, phi: &[f64]) -> f64 {
    let r = grid.nodes();
    let mut acc = 0.0;
    for k in 0..grid.len() - 1 {
        let dv = r[k + 1] * phi[k + 1] - r[k] * phi[k];
        acc += dv * dv;
    }
    4.0 * PI * acc / grid.step()
}

pub fn solve_poisson(u: &RadialFunction, q: f64) -> PoissonField {
    let grid = u.grid();
    let rho: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let phi: Vec<f64> = newton_potential(grid, &rho)
        .into_iter()
        .map(|p| q * p)
        .collect();
    let interaction: f64 = grid
        .mass()
        .iter()
        .zip(&phi)
        .zip(&rho)
        .map(|((m, p), r)| m * p * r)
        .sum();
    let d12 = d12_norm_sq(grid, &phi);
    debug_assert!(
        q == 0.0 || (d12 - q * interaction).abs() <= 1e-8 * (q * interaction).abs().max(1e-300),
        "Poisson identity violated: {d12} vs {}",
        q * interaction
    );
    PoissonField {
        phi,
        grid: Arc::clone(grid),
        d12_norm_sq: d12,
        interaction,
        q,
    }
}

/// Independent route: solve the tridiagonal boundary-value problem for
/// `v = rφ`, `−v'' = q r u²`, `v(0) = 0`, `v'(r_max) = 0`, by forward
/// elimination. Used as an oracle for [`solve_poisson`].
pub fn solve_poisson_fd(u: &RadialFunction, q: f64) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.len();
    let h = grid.step();
    let r = grid.nodes();
    let w = grid.weights();
    // Unknowns v_1..v_{n-1}. Rows: (2v_i − v_{i−1} − v_{i+1})/h = w_i f_i,
    // last row (v_{n−1} − v_{n−2})/h = w_{n−1} f_{n−1}.
    let m = n - 1;
    let load: Vec<f64> = (1..n)
        .map(|i| w[i] * q * r[i] * u.values()[i].powi(2))
        .collect();
    let mut diag = vec![2.0 / h; m];
    diag[m - 1] = 1.0 / h;
    let off = -1.0 / h;
    // Thomas algorithm.
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    c_prime[0] = off / diag[0];
    d_prime[0] = load[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        d_prime[i] = (load[i] - off * d_prime[i - 1]) / denom;
    }
    let mut v = vec![0.0; m];
    v[m - 1] = d_prime[m - 1];
    for i in (0..m - 1).rev() {
        v[i] = d_prime[i] - c_prime[i] * v[i + 1];
    }
    let mut phi = vec![0.0; n];
    for i in 1..n {
        phi[i] = v[i - 1] / r[i];
    }
    // φ is even and smooth at the origin.
    phi[0] = (4.0 * phi[1] - phi[2]) / 3.0;
    phi
}

/// Relative L² residual of the discrete `−Δφ − qu²` on the free nodes.
pub fn poisson_residual(u: &RadialFunction, field: &PoissonField) -> f64 {
    let grid = u.grid();
    let lap = grid.neg_laplacian(field.phi());
    let mut num = 0.0;
    let mut den = 0.0;
    for i in grid.free_nodes() {
        let src = field.q * u.values()[i].powi(2);
        num += grid.mass()[i] * (lap[i] - src).powi(2);
        den += grid.mass()[i] * src * src;
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScalingReport {
    /// `max_i |φ_{u_θ}(r_i) − θ²φ_u(r_i/θ)| / |θ²φ_u(r_i/θ)|`.
    pub max_rel_deviation: f64,
    /// `|I(u_θ) − θ⁵ I(u)| / (θ⁵ I(u))` with `I(u) = ∫φ_u u²`.
    pub interaction_rel_deviation: f64,
}

/// Compares `φ_{u_θ}` against `θ² φ_u(·/θ)` on every node.
pub fn check_scaling(u: &RadialFunction, theta: f64, q: f64) -> Result<ScalingReport, GridError> {
    let dilated = u.dilate(theta)?;
    let base = solve_poisson(u, q);
    let scaled = solve_poisson(&dilated, q);
    let mut worst = 0.0_f64;
    for (i, &r) in u.grid().nodes().iter().enumerate() {
        let expected = theta * theta * base.eval(r / theta);
        let got = scaled.phi()[i];
        if expected != 0.0 {
            worst = worst.max((got - expected).abs() / expected.abs());
        } else {
            worst = worst.max(got.abs());
        }
    }
    let expected = theta.powi(5) * base.interaction;
    let interaction_rel_deviation = if expected != 0.0 {
        (scaled.interaction - expected).abs() / expected.abs()
    } else {
        scaled.interaction.abs()
    };
    Ok(ScalingReport {
        max_rel_deviation: worst,
        interaction_rel_deviation,
    })
}

/// `(∫φ_u u², q‖u‖_α⁴)`; their ratio is bounded by a universal constant.
pub fn interaction_bound_check(u: &RadialFunction, q: f64) -> (f64, f64) {
    let field = solve_poisson(u, q);
    let alpha_pow = ls_power(u, ALPHA).expect("α > 1");
    let norm4 = alpha_pow.powf(4.0 / ALPHA);
    (field.interaction, q * norm4)
}
