//! The reduced functional
//! `I_{q,λ}^T(u) = ½∫|∇u|² + (q/4)k_T(u)∫φ_u u² + ∫G₂(u) − λ∫G₁(u)`,
//! its H¹ gradient and the Pohozaev residual.

use std::fmt::Debug;
use std::sync::Arc;

use serde::Serialize;

use crate::error::SolverError;
use crate::grid::{ls_power, RadialFunction};
use crate::nonlinearity::SplitNonlinearity;
use crate::poisson::{solve_poisson, PoissonField};
use crate::ALPHA;

/// Scalar switch `χ` with `χ = 1` on `[0, 1]` and `χ = 0` on `[2, ∞)`.
pub trait Cutoff: Debug + Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;
}

/// `χ(s) = 1 − (6t⁵ − 15t⁴ + 10t³)`, `t = s − 1` on `[1, 2]`. `C²`, with
/// `sup|χ'| = 15/8`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuinticCutoff;

impl Cutoff for QuinticCutoff {
    fn value(&self, s: f64) -> f64 {
        if s <= 1.0 {
            1.0
        } else if s >= 2.0 {
            0.0
        } else {
            let t = s - 1.0;
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    fn derivative(&self, s: f64) -> f64 {
        if s <= 1.0 || s >= 2.0 {
            0.0
        } else {
            let t = s - 1.0;
            -30.0 * t * t * (t - 1.0) * (t - 1.0)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffContract {
    pub ones_on_unit: bool,
    pub zero_past_two: bool,
    pub within_unit_interval: bool,
    pub max_slope: f64,
    pub slope_ok: bool,
    pub flat_at_ends: bool,
    /// Largest mismatch between the stated derivative and a central difference.
    pub derivative_mismatch: f64,
}

impl CutoffContract {
    pub fn passed(&self) -> bool {
        self.ones_on_unit
            && self.zero_past_two
            && self.within_unit_interval
            && self.slope_ok
            && self.flat_at_ends
            && self.derivative_mismatch < 1e-5
    }
}

/// Scans `χ` on `points` uniform nodes of `[0, 3]`.
pub fn check_cutoff(chi: &dyn Cutoff, points: usize) -> CutoffContract {
    let points = points.max(4);
    let mut report = CutoffContract {
        ones_on_unit: true,
        zero_past_two: true,
        within_unit_interval: true,
        max_slope: 0.0,
        slope_ok: true,
        flat_at_ends: chi.derivative(1.0).abs() < 1e-12 && chi.derivative(2.0).abs() < 1e-12,
        derivative_mismatch: 0.0,
    };
    let fd_step = 1e-6;
    for k in 0..points {
        let s = 3.0 * k as f64 / (points - 1) as f64;
        let v = chi.value(s);
        let d = chi.derivative(s);
        if s <= 1.0 && v != 1.0 {
            report.ones_on_unit = false;
        }
        if s >= 2.0 && v != 0.0 {
            report.zero_past_two = false;
        }
        if !(0.0..=1.0).contains(&v) {
            report.within_unit_interval = false;
        }
        report.max_slope = report.max_slope.max(d.abs());
        let lo = (s - fd_step).max(0.0);
        let fd = (chi.value(s + fd_step) - chi.value(lo)) / (s + fd_step - lo);
        report.derivative_mismatch = report.derivative_mismatch.max((fd - d).abs());
    }
    report.slope_ok = report.max_slope <= 2.0;
    report
}

#[derive(Debug, Clone)]
pub struct TruncationConfig {
    pub t_level: f64,
    pub cutoff: Arc<dyn Cutoff>,
}

impl TruncationConfig {
    pub fn new(t_level: f64) -> Result<Self, SolverError> {
        Self::with_cutoff(t_level, Arc::new(QuinticCutoff))
    }

    pub fn with_cutoff(t_level: f64, cutoff: Arc<dyn Cutoff>) -> Result<Self, SolverError> {
        if !(t_level.is_finite() && t_level > 0.0) {
            return Err(SolverError::InvalidTruncation(t_level));
        }
        Ok(Self { t_level, cutoff })
    }

    pub fn alpha(&self) -> f64 {
        ALPHA
    }

    /// `T^α`.
    pub fn t_alpha(&self) -> f64 {
        self.t_level.powf(ALPHA)
    }

    /// `‖u‖_α^α / T^α`.
    pub fn ratio(&self, u: &RadialFunction) -> f64 {
        alpha_power(u) / self.t_alpha()
    }

    pub fn k_t(&self, u: &RadialFunction) -> f64 {
        self.cutoff.value(self.ratio(u))
    }
}

fn alpha_power(u: &RadialFunction) -> f64 {
    ls_power(u, ALPHA).expect("α > 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub coulomb: f64,
    pub g2_part: f64,
    pub g1_part: f64,
    pub lambda: f64,
    pub total: f64,
    /// `I_q(u)` at `λ = 1` with the truncation ignored.
    pub physical: f64,
    pub k_t: f64,
    /// `∫φ_u u²`.
    pub interaction: f64,
}

/// Dual (nodal-derivative) pieces of the gradient. Summing them gives the
/// derivative of the energy with respect to each nodal value.
#[derive(Debug, Clone)]
pub struct GradientTerms {
    pub kinetic: Vec<f64>,
    pub coulomb: Vec<f64>,
    pub cutoff: Vec<f64>,
    pub g2: Vec<f64>,
    pub g1: Vec<f64>,
    pub lambda: f64,
}

impl GradientTerms {
    pub fn total(&self) -> Vec<f64> {
        (0..self.kinetic.len())
            .map(|i| {
                self.kinetic[i] + self.coulomb[i] + self.cutoff[i] + self.g2[i]
                    - self.lambda * self.g1[i]
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Functional {
    split: SplitNonlinearity,
    q: f64,
    truncation: Option<TruncationConfig>,
}

impl Functional {
    /// `truncation = None` gives the untruncated `I_{q,λ}`.
    pub fn new(
        split: SplitNonlinearity,
        q: f64,
        truncation: Option<TruncationConfig>,
    ) -> Result<Self, SolverError> {
        if !(q.is_finite() && q >= 0.0) {
            return Err(SolverError::InvalidCoupling(q));
        }
        Ok(Self {
            split,
            q,
            truncation,
        })
    }

    pub fn split(&self) -> &SplitNonlinearity {
        &self.split
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn truncation(&self) -> Option<&TruncationConfig> {
        self.truncation.as_ref()
    }

    pub fn untruncated(&self) -> Self {
        Self {
            truncation: None,
            ..self.clone()
        }
    }

    pub fn k_t(&self, u: &RadialFunction) -> f64 {
        self.truncation.as_ref().map_or(1.0, |t| t.k_t(u))
    }

    pub fn energy(&self, u: &RadialFunction, lambda: f64) -> EnergyBreakdown {
        let field = solve_poisson(u, self.q);
        self.energy_with(u, &field, lambda)
    }

    pub fn energy_with(
        &self,
        u: &RadialFunction,
        field: &PoissonField,
        lambda: f64,
    ) -> EnergyBreakdown {
        let grid = u.grid();
        let kinetic = 0.5 * grid.kinetic(u.values());
        let mut g1_part = 0.0;
        let mut g2_part = 0.0;
        for (m, &v) in grid.mass().iter().zip(u.values()) {
            if *m != 0.0 {
                g1_part += m * self.split.big_g1(v);
                g2_part += m * self.split.big_g2(v);
            }
        }
        let k_t = self.k_t(u);
        let bare = 0.25 * self.q * field.interaction;
        let coulomb = k_t * bare;
        EnergyBreakdown {
            kinetic,
            coulomb,
            g2_part,
            g1_part,
            lambda,
            total: kinetic + coulomb + g2_part - lambda * g1_part,
            physical: kinetic + bare + g2_part - g1_part,
            k_t,
            interaction: field.interaction,
        }
    }

    pub fn gradient_terms(&self, u: &RadialFunction, lambda: f64) -> GradientTerms {
        let field = solve_poisson(u, self.q);
        self.gradient_terms_with(u, &field, lambda)
    }

    pub fn gradient_terms_with(
        &self,
        u: &RadialFunction,
        field: &PoissonField,
        lambda: f64,
    ) -> GradientTerms {
        let grid = u.grid();
        let n = grid.len();
        let mass = grid.mass();
        let vals = u.values();
        let k_t = self.k_t(u);
        let mut terms = GradientTerms {
            kinetic: grid.stiffness_apply(vals),
            coulomb: vec![0.0; n],
            cutoff: vec![0.0; n],
            g2: vec![0.0; n],
            g1: vec![0.0; n],
            lambda,
        };
        let cutoff_scale = match &self.truncation {
            Some(t) => {
                let d = t.cutoff.derivative(t.ratio(u));
                self.q * ALPHA / (4.0 * t.t_alpha()) * d * field.interaction
            }
            None => 0.0,
        };
        for i in grid.free_nodes() {
            let v = vals[i];
            terms.coulomb[i] = self.q * k_t * mass[i] * field.phi()[i] * v;
            if cutoff_scale != 0.0 {
                terms.cutoff[i] = cutoff_scale * mass[i] * v.abs().powf(ALPHA - 2.0) * v;
            }
            terms.g2[i] = mass[i] * self.split.g2(v);
            terms.g1[i] = mass[i] * self.split.g1(v);
        }
        terms
    }

    /// Nodal derivative of the energy (a dual vector).
    pub fn dual_gradient(&self, u: &RadialFunction, lambda: f64) -> Vec<f64> {
        self.gradient_terms(u, lambda).total()
    }

    /// H¹ Riesz representative of the derivative.
    pub fn gradient(&self, u: &RadialFunction, lambda: f64) -> RadialFunction {
        let dual = self.dual_gradient(u, lambda);
        RadialFunction::from_raw(u.grid(), u.grid().riesz_from_dual(&dual))
    }

    /// `(Riesz gradient, its H¹ norm)`.
    pub fn gradient_and_norm(&self, u: &RadialFunction, lambda: f64) -> (RadialFunction, f64) {
        let dual = self.dual_gradient(u, lambda);
        riesz_and_norm(u, &dual)
    }

    pub fn gradient_norm(&self, u: &RadialFunction, lambda: f64) -> f64 {
        self.gradient_and_norm(u, lambda).1
    }

    /// Dilation identity residual
    /// `½K + (5q/4)k_T I + (3q/T^α)χ'(·)‖u‖_α^α I − 3λ∫G₁ + 3∫G₂`, in absolute
    /// value, divided by `max(1, ½K)`.
    pub fn pohozaev_residual(&self, u: &RadialFunction, lambda: f64) -> f64 {
        self.pohozaev_with_coefficient(u, lambda, 3.0)
    }

    /// Same identity with the coefficient `3q/(4T^α)` that differentiating
    /// `θ ↦ I(u(·/θ))` at `θ = 1` produces.
    pub fn pohozaev_residual_dilation(&self, u: &RadialFunction, lambda: f64) -> f64 {
        self.pohozaev_with_coefficient(u, lambda, 0.75)
    }

    fn pohozaev_with_coefficient(&self, u: &RadialFunction, lambda: f64, coeff: f64) -> f64 {
        let e = self.energy(u, lambda);
        let cutoff_term = match &self.truncation {
            Some(t) => {
                let a = alpha_power(u);
                coeff * self.q / t.t_alpha()
                    * t.cutoff.derivative(a / t.t_alpha())
                    * a
                    * e.interaction
            }
            None => 0.0,
        };
        let lhs = e.kinetic + 1.25 * self.q * e.k_t * e.interaction + cutoff_term;
        let rhs = 3.0 * lambda * e.g1_part - 3.0 * e.g2_part;
        (lhs - rhs).abs() / e.kinetic.max(1.0)
    }
}

pub(crate) fn riesz_and_norm(u: &RadialFunction, dual: &[f64]) -> (RadialFunction, f64) {
    let grid = u.grid();
    let w = grid.riesz_from_dual(dual);
    let norm_sq: f64 = grid.free_nodes().map(|i| dual[i] * w[i]).sum();
    (RadialFunction::from_raw(grid, w), norm_sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{h1_inner, RadialGrid};
    use crate::nonlinearity::Nonlinearity;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cubic() -> SplitNonlinearity {
        Nonlinearity::power(3.0).unwrap().modify().split().unwrap()
    }

    #[test]
    fn quintic_values() {
        let chi = QuinticCutoff;
        assert_eq!(chi.value(0.5), 1.0);
        assert_eq!(chi.value(1.0), 1.0);
        assert_eq!(chi.value(2.0), 0.0);
        assert_relative_eq!(chi.value(1.5), 0.5, epsilon = 1e-15);
        assert_relative_eq!(chi.derivative(1.5), -1.875, epsilon = 1e-15);
        assert!(check_cutoff(&chi, 10_000).passed());
    }

    #[derive(Debug)]
    struct Steep;
    impl Cutoff for Steep {
        fn value(&self, s: f64) -> f64 {
            (1.0 - 3.0 * (s - 1.0)).clamp(0.0, 1.0)
        }
        fn derivative(&self, s: f64) -> f64 {
            if s > 1.0 && s < 4.0 / 3.0 {
                -3.0
            } else {
                0.0
            }
        }
    }

    #[test]
    fn steep_cutoff_fails_contract() {
        let rep = check_cutoff(&Steep, 10_000);
        assert!(!rep.slope_ok);
        assert!(!rep.passed());
    }

    #[test]
    fn k_t_examples() {
        let grid = RadialGrid::new(10.0, 1001).unwrap();
        let u = RadialFunction::from_fn(&grid, |r| (-r * r).exp()).unwrap();
        let a = alpha_power(&u);
        let at = |ratio: f64| TruncationConfig::new((a / ratio).powf(1.0 / ALPHA)).unwrap();
        assert_eq!(at(1.0).k_t(&RadialFunction::zeros(&grid)), 1.0);
        assert_relative_eq!(at(1.0).k_t(&u), 1.0);
        assert_relative_eq!(at(2.0).k_t(&u), 0.0, epsilon = 1e-12);
        assert!(TruncationConfig::new(0.0).is_err());
    }

    #[test]
    fn zero_function() {
        let grid = RadialGrid::new(10.0, 501).unwrap();
        let f = Functional::new(cubic(), 1.0, Some(TruncationConfig::new(1.0).unwrap())).unwrap();
        let z = RadialFunction::zeros(&grid);
        assert_eq!(f.energy(&z, 0.7).total, 0.0);
        assert_eq!(f.gradient_norm(&z, 0.7), 0.0);
        assert_eq!(f.pohozaev_residual(&z, 0.7), 0.0);
    }

    #[test]
    fn cubic_energy_by_quadrature() {
        let grid = RadialGrid::new(12.0, 1201).unwrap();
        let u = RadialFunction::from_fn(&grid, |r| 1.3 * (-r * r / 2.0).exp()).unwrap();
        let f = Functional::new(cubic(), 0.0, None).unwrap();
        let lambda = 0.8;
        let e = f.energy(&u, lambda);
        let (mut l2, mut l4) = (0.0, 0.0);
        for (m, v) in grid.mass().iter().zip(u.values()) {
            l2 += m * v * v;
            l4 += m * v.powi(4);
        }
        let k = grid.kinetic(u.values());
        assert_relative_eq!(
            e.total,
            0.5 * k + 0.5 * l2 - lambda / 4.0 * l4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = RadialGrid::new(12.0, 601).unwrap();
        let u = RadialFunction::from_fn(&grid, |r| 2.0 * (-r * r / 3.0).exp()).unwrap();
        let v = RadialFunction::from_fn(&grid, |r| (1.0 + r).recip() * (-r / 2.0).exp()).unwrap();
        let a = alpha_power(&u);
        let t = TruncationConfig::new((a / 1.4).powf(1.0 / ALPHA)).unwrap();
        let f = Functional::new(cubic(), 0.6, Some(t)).unwrap();
        let lambda = 0.9;
        let g = f.gradient(&u, lambda);
        let h = 1e-5;
        let fd = (f.energy(&u.add_scaled(h, &v), lambda).total
            - f.energy(&u.add_scaled(-h, &v), lambda).total)
            / (2.0 * h);
        assert_relative_eq!(h1_inner(&g, &v), fd, max_relative = 1e-6);
    }

    #[test]
    fn cutoff_term_is_the_only_difference() {
        let grid = RadialGrid::new(12.0, 601).unwrap();
        let u = RadialFunction::from_fn(&grid, |r| 2.0 * (-r * r / 3.0).exp()).unwrap();
        let a = alpha_power(&u);
        let t = TruncationConfig::new((a / 1.5).powf(1.0 / ALPHA)).unwrap();
        let f = Functional::new(cubic(), 0.6, Some(t.clone())).unwrap();
        let terms = f.gradient_terms(&u, 1.0);
        assert!(terms.cutoff.iter().any(|&c| c != 0.0));
        // independent assembly of the χ' term
        let field = solve_poisson(&u, 0.6);
        let scale =
            0.6 * ALPHA / (4.0 * t.t_alpha()) * t.cutoff.derivative(1.5) * field.interaction;
        let total = terms.total();
        for i in grid.free_nodes() {
            let rest = terms.kinetic[i] + terms.coulomb[i] + terms.g2[i] - terms.g1[i];
            let expected = scale * grid.mass()[i] * u.values()[i].powf(ALPHA - 1.0);
            assert_relative_eq!(
                total[i] - rest,
                expected,
                epsilon = 1e-14,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn pohozaev_matches_term_quadrature() {
        let grid = RadialGrid::new(12.0, 1201).unwrap();
        let u = RadialFunction::from_fn(&grid, |r| 1.5 * (-r * r / 2.0).exp()).unwrap();
        let f = Functional::new(cubic(), 0.3, None).unwrap();
        let e = f.energy(&u, 1.0);
        let expected = (e.kinetic + 1.25 * 0.3 * e.interaction - 3.0 * e.g1_part + 3.0 * e.g2_part)
            .abs()
            / e.kinetic.max(1.0);
        let got = f.pohozaev_residual(&u, 1.0);
        assert!(got > 1e-2);
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    fn bump(grid: &Arc<RadialGrid>, amp: f64, width: f64) -> RadialFunction {
        RadialFunction::from_fn(grid, |r| amp * (-(r / width).powi(2)).exp()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn energy_nonincreasing_in_lambda(amp in 0.1f64..5.0, width in 0.5f64..3.0, l1 in 0.5f64..1.0, l2 in 0.5f64..1.0) {
            let grid = RadialGrid::new(15.0, 601).unwrap();
            let u = bump(&grid, amp, width);
            let f = Functional::new(cubic(), 0.2, None).unwrap();
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            prop_assert!(f.energy(&u, hi).total <= f.energy(&u, lo).total);
            prop_assert!(f.energy(&u, hi).g1_part >= 0.0);
        }

        #[test]
        fn truncation_transparent_below_level(amp in 0.1f64..5.0, width in 0.5f64..3.0, slack in 1.0f64..3.0) {
            let grid = RadialGrid::new(15.0, 601).unwrap();
            let u = bump(&grid, amp, width);
            let t = (alpha_power(&u).powf(1.0 / ALPHA)) * slack;
            let trunc = Functional::new(cubic(), 0.4, Some(TruncationConfig::new(t).unwrap())).unwrap();
            let plain = trunc.untruncated();
            prop_assert_eq!(trunc.energy(&u, 0.9).total, plain.energy(&u, 0.9).total);
            prop_assert_eq!(trunc.dual_gradient(&u, 0.9), plain.dual_gradient(&u, 0.9));
        }

        #[test]
        fn coercivity_floor(amp in 0.01f64..0.5, width in 0.5f64..3.0) {
            let grid = RadialGrid::new(15.0, 601).unwrap();
            let u = bump(&grid, amp, width);
            let split = cubic();
            let cert = split.epsilon_bound_certificate(0.5).unwrap();
            let f = Functional::new(split.clone(), 0.1, None).unwrap();
            let e = f.energy(&u, 1.0);
            let (mut l2, mut l6) = (0.0, 0.0);
            for (m, v) in grid.mass().iter().zip(u.values()) {
                l2 += m * v * v;
                l6 += m * v.powi(6);
            }
            let floor = e.kinetic + 0.5 * split.m() / 2.0 * l2 - cert.c_eps / 6.0 * l6;
            prop_assert!(e.total >= floor - 1e-12 * floor.abs());
        }
    }
}
