//! Uniform radial grid on `[0, r_max]` and radial profiles living on it.
//!
//! Integrals over ℝ³ of radial functions are realized as
//! `4π ∫_0^{r_max} r² f(r) dr` with the composite trapezoidal rule. The
//! gradient energy is discretized through `v = r·u`, for which
//! `∫_0^R r² u'² dr = ∫_0^R v'² dr` whenever `u(R) = 0`. The resulting
//! three-point operator has the exact radial Newton kernel as its discrete
//! Green's function (see [`crate::poisson`]), so the discrete Poisson
//! identities hold to round-off.
//!
//! The origin node carries zero volume weight and, in the `v = r·u` form,
//! zero stiffness. Its value is never seen by any integral; solver output
//! fills it from the symmetric limit `u(r) ≈ a + b r²`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::GridError;
use crate::linalg::Tridiagonal;

pub const DEFAULT_R_MAX: f64 = 30.0;
pub const DEFAULT_NODES: usize = 3000;

/// Relative threshold below which a sample counts as outside the support.
const SUPPORT_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct RadialGrid {
    r_max: f64,
    step: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `4π w_i r_i²`: volume element attached to node `i`.
    mass: Vec<f64>,
    /// H¹ Gram operator on the free nodes `1..n-1`.
    gram: Tridiagonal,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Arc<Self>, GridError> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(GridError::InvalidRadius(r_max));
        }
        if n < 4 {
            return Err(GridError::TooFewNodes(n));
        }
        let step = r_max / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { r_max } else { i as f64 * step })
            .collect();
        let mut weights = vec![step; n];
        weights[0] = 0.5 * step;
        weights[n - 1] = 0.5 * step;
        let mass: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(r, w)| 4.0 * PI * w * r * r)
            .collect();

        // Free unknowns are u_1..u_{n-2}; index k maps to node k + 1.
        let free = n - 2;
        let mut diag = vec![0.0; free];
        let mut off = vec![0.0; free.saturating_sub(1)];
        for k in 0..free {
            let i = k + 1;
            diag[k] = 8.0 * PI * nodes[i] * nodes[i] / step + mass[i];
            if k + 1 < free {
                off[k] = -4.0 * PI * nodes[i] * nodes[i + 1] / step;
            }
        }
        let gram = Tridiagonal::factor(diag, off).ok_or(GridError::IllConditioned)?;

        Ok(Arc::new(Self {
            r_max,
            step,
            nodes,
            weights,
            mass,
            gram,
        }))
    }

    pub fn with_defaults() -> Arc<Self> {
        Self::new(DEFAULT_R_MAX, DEFAULT_NODES).expect("default grid is valid")
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Range of nodes that carry unknowns (origin and outer boundary excluded).
    pub fn free_nodes(&self) -> std::ops::Range<usize> {
        1..self.len() - 1
    }

    /// `∫_{ℝ³} f` for nodal samples `f`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.mass.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// `∫|∇u|²` from nodal values, via `v = r·u`.
    pub fn kinetic(&self, u: &[f64]) -> f64 {
        let h = self.step;
        let r = &self.nodes;
        let mut acc = 0.0;
        for k in 0..self.len() - 1 {
            let dv = r[k + 1] * u[k + 1] - r[k] * u[k];
            acc += dv * dv;
        }
        4.0 * PI * acc / h
    }

    /// Derivative of `½∫|∇u|²` with respect to each nodal value. Entries at
    /// the origin and the outer node are zero.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let h = self.step;
        let r = &self.nodes;
        let mut out = vec![0.0; n];
        for i in self.free_nodes() {
            let v = 2.0 * r[i] * u[i] - r[i - 1] * u[i - 1] - r[i + 1] * u[i + 1];
            out[i] = 4.0 * PI * r[i] * v / h;
        }
        out
    }

    /// Discrete `−Δu = −(1/r)(r u)''` at the free nodes.
    pub fn neg_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let h = self.step;
        let r = &self.nodes;
        let mut out = vec![0.0; self.len()];
        for i in self.free_nodes() {
            let v = 2.0 * r[i] * u[i] - r[i - 1] * u[i - 1] - r[i + 1] * u[i + 1];
            out[i] = v / (h * h * r[i]);
        }
        out
    }

    /// H¹ inner product `∫∇a·∇b + ab` of nodal vectors.
    pub fn h1_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let h = self.step;
        let r = &self.nodes;
        let mut grad = 0.0;
        for k in 0..self.len() - 1 {
            let da = r[k + 1] * a[k + 1] - r[k] * a[k];
            let db = r[k + 1] * b[k + 1] - r[k] * b[k];
            grad += da * db;
        }
        let mass: f64 = self.free_nodes().map(|i| self.mass[i] * a[i] * b[i]).sum();
        4.0 * PI * grad / h + mass
    }

    /// Solves `G w = d` where `G` is the H¹ Gram matrix and `d` holds dual
    /// (nodal-derivative) values. The result is the H¹ Riesz representative.
    pub fn riesz_from_dual(&self, dual: &[f64]) -> Vec<f64> {
        let n = self.len();
        let rhs: Vec<f64> = self.free_nodes().map(|i| dual[i]).collect();
        let sol = self.gram.solve(&rhs);
        let mut out = vec![0.0; n];
        out[1..n - 1].copy_from_slice(&sol);
        fill_origin(&mut out);
        out
    }

    /// Applies the H¹ Gram matrix to nodal values (dual of [`Self::riesz_from_dual`]).
    pub fn gram_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let x: Vec<f64> = self.free_nodes().map(|i| u[i]).collect();
        let y = self.gram.apply(&x);
        let mut out = vec![0.0; n];
        out[1..n - 1].copy_from_slice(&y);
        out
    }
}

/// Sets the origin sample from the even expansion `a + b r²` through nodes 1, 2.
pub(crate) fn fill_origin(values: &mut [f64]) {
    if values.len() > 2 {
        values[0] = (4.0 * values[1] - values[2]) / 3.0;
    }
}

/// Sampled radial profile `u(r_i)` with `u(r_max) = 0`.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every node. The outer node is set to zero.
    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::from_values(grid, values)
    }

    /// Wraps nodal values. The outer node is the Dirichlet truncation and is
    /// overwritten with zero.
    pub fn from_values(grid: &Arc<RadialGrid>, mut values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        let last = values.len() - 1;
        values[last] = 0.0;
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_raw(grid: &Arc<RadialGrid>, mut values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        let last = values.len() - 1;
        values[last] = 0.0;
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a·x`.
    pub fn add_scaled(&self, a: f64, x: &RadialFunction) -> Self {
        let values = self
            .values
            .iter()
            .zip(&x.values)
            .map(|(s, v)| s + a * v)
            .collect();
        Self::from_raw(&self.grid, values)
    }

    /// Pointwise product, used for densities such as `u·v`.
    pub fn mul(&self, other: &RadialFunction) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self::from_raw(&self.grid, values)
    }

    /// Re-derives the origin sample from the even expansion at the first nodes.
    pub fn with_symmetric_origin(mut self) -> Self {
        fill_origin(&mut self.values);
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest node radius where `|u|` exceeds a tiny fraction of its maximum.
    pub fn support_radius(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let cut = SUPPORT_THRESHOLD * peak;
        self.values
            .iter()
            .rposition(|v| v.abs() > cut)
            .map(|i| self.grid.nodes()[i])
            .unwrap_or(0.0)
    }

    /// Four-point Lagrange interpolation with even reflection at the origin.
    /// Zero beyond `r_max`.
    pub fn sample(&self, r: f64) -> f64 {
        let r = r.abs();
        let grid = &self.grid;
        if r >= grid.r_max() {
            return 0.0;
        }
        let h = grid.step();
        let n = grid.len() as isize;
        let x = r / h;
        let base = (x.floor() as isize).min(n - 2);
        let t = x - base as f64;
        let at = |j: isize| -> f64 {
            let j = j.abs();
            if j >= n {
                0.0
            } else {
                self.values[j as usize]
            }
        };
        let (pm1, p0, p1, p2) = (at(base - 1), at(base), at(base + 1), at(base + 2));
        // Lagrange basis on nodes -1, 0, 1, 2.
        let l_m1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l_0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l_1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l_2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        pm1 * l_m1 + p0 * l_0 + p1 * l_1 + p2 * l_2
    }

    /// `u_θ(r) = u(r/θ)`, sampled on the same grid.
    pub fn dilate(&self, theta: f64) -> Result<Self, GridError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(GridError::InvalidScale(theta));
        }
        let reach = theta * self.support_radius();
        if reach > self.grid.r_max() {
            return Err(GridError::SupportOverflow {
                reach,
                r_max: self.grid.r_max(),
            });
        }
        let values = self
            .grid
            .nodes()
            .iter()
            .map(|&r| self.sample(r / theta))
            .collect();
        Ok(Self::from_raw(&self.grid, values))
    }
}

/// `∫_{ℝ³} f = 4π Σ w_i r_i² f_i`.
pub fn volume_integral(f: &RadialFunction) -> f64 {
    f.grid.integrate(&f.values)
}

/// `‖u‖_s = (∫|u|^s)^{1/s}` for `s ≥ 1`.
pub fn norm_ls(u: &RadialFunction, s: f64) -> Result<f64, GridError> {
    Ok(ls_power(u, s)?.powf(1.0 / s))
}

/// `∫|u|^s`, i.e. `‖u‖_s^s`.
pub fn ls_power(u: &RadialFunction, s: f64) -> Result<f64, GridError> {
    if !(s.is_finite() && s >= 1.0) {
        return Err(GridError::InvalidExponent(s));
    }
    let grid = &u.grid;
    Ok(grid
        .mass()
        .iter()
        .zip(&u.values)
        .map(|(m, v)| m * v.abs().powf(s))
        .sum())
}

/// `‖∇u‖₂²`.
pub fn gradient_norm_sq(u: &RadialFunction) -> f64 {
    u.grid.kinetic(&u.values)
}

/// `‖u‖ = (∫|∇u|² + u²)^{1/2}`.
pub fn norm_h1(u: &RadialFunction) -> f64 {
    let l2 = u
        .grid
        .integrate(&u.values.iter().map(|v| v * v).collect::<Vec<_>>());
    (gradient_norm_sq(u) + l2).sqrt()
}

/// H¹ inner product of two profiles on the same grid.
pub fn h1_inner(a: &RadialFunction, b: &RadialFunction) -> f64 {
    a.grid.h1_inner(&a.values, &b.values)
}

/// Solves `(−Δ + 1) w = v`, `w(r_max) = 0`, so that `⟨w, φ⟩_{H¹} = ∫ v φ`.
pub fn h1_riesz(v: &RadialFunction) -> RadialFunction {
    let grid = &v.grid;
    let dual: Vec<f64> = grid
        .mass()
        .iter()
        .zip(&v.values)
        .map(|(m, x)| m * x)
        .collect();
    RadialFunction::from_raw(grid, grid.riesz_from_dual(&dual))
}
