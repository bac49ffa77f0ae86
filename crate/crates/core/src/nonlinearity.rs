//! The nonlinear term `g`, its modification `g̃` and the split `g = g₁ − g₂`.
//!
//! Every family is described by its values on `s ≥ 0` together with two
//! exact primitives: `∫_0^x g` and `∫_0^x (g(τ) + mτ)⁺ dτ`. The modified
//! function and both halves of the split are assembled from those, so each
//! `G` is the exact antiderivative of the matching `g` and energies and
//! gradients stay mutually consistent.

use serde::Serialize;

use crate::error::NonlinearityError;

/// Logarithmic scan range used by the hypothesis checks.
pub const SCAN_MIN: f64 = 1e-4;
pub const SCAN_MAX: f64 = 1e2;
pub const SCAN_POINTS: usize = 10_000;

/// Sample points for the small-`s` slope estimate.
const MASS_PROBES: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Log-spaced points in `[lo, hi]`.
pub fn log_scan(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let last = (count.max(2) - 1) as f64;
    (0..count).map(move |k| (a + (b - a) * k as f64 / last).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `g(s) = −mass·s + coeff·|s|^{p−1}s`.
    Power { p: f64, mass: f64, coeff: f64 },
    /// Piecewise-linear interpolation of `(s, g(s))` knots on `s ≥ 0`,
    /// held constant past the last knot and extended oddly to `s < 0`.
    Tabulated(Table),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    s: Vec<f64>,
    g: Vec<f64>,
    /// `∫_0^{s_k} g`.
    prim: Vec<f64>,
    /// `∫_0^{s_k} (g + mτ)⁺`, filled once `m` is known.
    pos_prim: Vec<f64>,
    mass: f64,
}

impl Table {
    fn new(points: &[(f64, f64)]) -> Result<Self, NonlinearityError> {
        let bad = |msg: &str| Err(NonlinearityError::InvalidTable(msg.to_string()));
        if points.len() < 2 {
            return bad("need at least two knots");
        }
        if points
            .iter()
            .any(|(s, g)| !(s.is_finite() && g.is_finite()))
        {
            return bad("non-finite entry");
        }
        if points[0] != (0.0, 0.0) {
            return bad("first knot must be (0, 0)");
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("abscissae must be strictly increasing");
        }
        let s: Vec<f64> = points.iter().map(|p| p.0).collect();
        let g: Vec<f64> = points.iter().map(|p| p.1).collect();
        let mut prim = vec![0.0; s.len()];
        for k in 1..s.len() {
            prim[k] = prim[k - 1] + 0.5 * (s[k] - s[k - 1]) * (g[k] + g[k - 1]);
        }
        let mut table = Self {
            pos_prim: vec![0.0; s.len()],
            s,
            g,
            prim,
            mass: 0.0,
        };
        let mass = -richardson_slope(|x| table.value(x));
        if !(mass.is_finite() && mass > 0.0) {
            return Err(NonlinearityError::NonPositiveMass(mass));
        }
        table.mass = mass;
        for k in 1..table.s.len() {
            let (a, b) = (table.s[k - 1], table.s[k]);
            let fa = table.g[k - 1] + mass * a;
            let fb = table.g[k] + mass * b;
            table.pos_prim[k] = table.pos_prim[k - 1] + positive_part_area(a, b, fa, fb);
        }
        Ok(table)
    }

    fn segment(&self, x: f64) -> usize {
        // Index k with s_k <= x < s_{k+1}, clamped to the last knot.
        match self.s.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(k) => k,
            Err(k) => k - 1,
        }
    }

    fn value(&self, x: f64) -> f64 {
        let last = self.s.len() - 1;
        if x >= self.s[last] {
            return self.g[last];
        }
        let k = self.segment(x);
        let t = (x - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.g[k] + t * (self.g[k + 1] - self.g[k])
    }

    fn primitive(&self, x: f64) -> f64 {
        let last = self.s.len() - 1;
        if x >= self.s[last] {
            return self.prim[last] + (x - self.s[last]) * self.g[last];
        }
        let k = self.segment(x);
        self.prim[k] + 0.5 * (x - self.s[k]) * (self.g[k] + self.value(x))
    }

    fn positive_primitive(&self, x: f64) -> f64 {
        let m = self.mass;
        let last = self.s.len() - 1;
        let k = if x >= self.s[last] {
            last
        } else {
            self.segment(x)
        };
        let a = self.s[k];
        self.pos_prim[k] + positive_part_area(a, x, self.value(a) + m * a, self.value(x) + m * x)
    }
}

/// `∫_a^b f⁺` for `f` linear with end values `fa`, `fb`.
fn positive_part_area(a: f64, b: f64, fa: f64, fb: f64) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    match (fa >= 0.0, fb >= 0.0) {
        (true, true) => 0.5 * len * (fa + fb),
        (false, false) => 0.0,
        (true, false) => 0.5 * len * fa * fa / (fa - fb),
        (false, true) => 0.5 * len * fb * fb / (fb - fa),
    }
}

/// Estimates `lim_{s→0⁺} g(s)/s` by two-level Richardson extrapolation on
/// the probes `10⁻², 10⁻³` (error assumed linear in `s`).
fn richardson_slope(g: impl Fn(f64) -> f64) -> f64 {
    let ratio = |s: f64| g(s) / s;
    let (coarse, fine) = (ratio(MASS_PROBES[0]), ratio(MASS_PROBES[1]));
    (10.0 * fine - coarse) / 9.0
}

impl Family {
    /// Raw `g` on `s ≥ 0`.
    fn raw(&self, s: f64) -> f64 {
        match self {
            Family::Power { p, mass, coeff } => -mass * s + coeff * s.powf(*p),
            Family::Tabulated(t) => t.value(s),
        }
    }

    /// `∫_0^x g` for `x ≥ 0`.
    fn raw_primitive(&self, x: f64) -> f64 {
        match self {
            Family::Power { p, mass, coeff } => {
                -0.5 * mass * x * x + coeff * x.powf(p + 1.0) / (p + 1.0)
            }
            Family::Tabulated(t) => t.primitive(x),
        }
    }

    /// `∫_0^x (g(τ) + mτ)⁺ dτ` for `x ≥ 0`.
    fn positive_primitive(&self, x: f64) -> f64 {
        match self {
            Family::Power { p, coeff, .. } => {
                if *coeff > 0.0 {
                    coeff * x.powf(p + 1.0) / (p + 1.0)
                } else {
                    0.0
                }
            }
            Family::Tabulated(t) => t.positive_primitive(x),
        }
    }

    fn mass(&self) -> f64 {
        match self {
            Family::Power { mass, .. } => *mass,
            Family::Tabulated(t) => t.mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    family: Family,
    m: f64,
    zeta: Option<f64>,
    s0: f64,
    modified: bool,
}

impl Nonlinearity {
    /// `g(s) = −s + |s|^{p−1}s`.
    pub fn power(p: f64) -> Result<Self, NonlinearityError> {
        Self::power_with(p, 1.0, 1.0)
    }

    /// `g(s) = −mass·s + coeff·|s|^{p−1}s`.
    pub fn power_with(p: f64, mass: f64, coeff: f64) -> Result<Self, NonlinearityError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(NonlinearityError::InvalidExponent(p));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(NonlinearityError::InvalidMass(mass));
        }
        if !coeff.is_finite() {
            return Err(NonlinearityError::InvalidTable(
                "non-finite coefficient".into(),
            ));
        }
        Ok(Self::from_family(Family::Power { p, mass, coeff }))
    }

    /// `g(s) = −m·s`: no attractive part at all.
    pub fn pure_mass(m: f64) -> Result<Self, NonlinearityError> {
        Self::power_with(2.0, m, 0.0)
    }

    /// Piecewise-linear `g` through the given `(s, g(s))` knots, `s ≥ 0`.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self, NonlinearityError> {
        Ok(Self::from_family(Family::Tabulated(Table::new(points)?)))
    }

    fn from_family(family: Family) -> Self {
        let m = family.mass();
        let zeta = select_zeta(&family);
        let s0 = zeta.map_or(f64::INFINITY, |z| first_zero_from(&family, z));
        Self {
            family,
            m,
            zeta,
            s0,
            modified: false,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The mass `m` with `g(s)/s → −m` as `s → 0⁺`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// A point with `G(ζ) > 0`, if the scan found one.
    pub fn zeta(&self) -> Option<f64> {
        self.zeta
    }

    /// First zero of `g` at or beyond `ζ`; `+∞` when there is none.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn is_modified(&self) -> bool {
        self.modified
    }

    /// `g̃`: equal to `g` on `[0, s₀]`, zero beyond, and
    /// `(g̃(−s) − ms)⁺ − g̃(−s)` on `ℝ₋`.
    pub fn modify(&self) -> Self {
        Self {
            modified: true,
            ..self.clone()
        }
    }

    /// Positive branch of `g̃` (or of `g` when unmodified).
    fn positive_branch(&self, s: f64) -> f64 {
        if self.modified && s > self.s0 {
            0.0
        } else {
            self.family.raw(s)
        }
    }

    fn positive_branch_primitive(&self, x: f64) -> f64 {
        self.family
            .raw_primitive(if self.modified { x.min(self.s0) } else { x })
    }

    /// `∫_0^x (g̃ + mτ)⁺` for `x ≥ 0` on the modified function.
    fn modified_positive_primitive(&self, x: f64) -> f64 {
        if x <= self.s0 {
            self.family.positive_primitive(x)
        } else {
            self.family.positive_primitive(self.s0) + 0.5 * self.m * (x * x - self.s0 * self.s0)
        }
    }

    pub fn g(&self, s: f64) -> f64 {
        if s >= 0.0 {
            return self.positive_branch(s);
        }
        let t = -s;
        if self.modified {
            let h = self.positive_branch(t);
            (h + self.m * t).max(0.0) - h
        } else {
            -self.family.raw(t)
        }
    }

    /// `G(s) = ∫_0^s g`.
    pub fn primitive(&self, s: f64) -> f64 {
        if s >= 0.0 {
            return self.positive_branch_primitive(s);
        }
        let t = -s;
        if self.modified {
            self.positive_branch_primitive(t) - self.modified_positive_primitive(t)
        } else {
            self.family.raw_primitive(t)
        }
    }

    pub fn split(&self) -> Result<SplitNonlinearity, NonlinearityError> {
        if !self.modified {
            return Err(NonlinearityError::NotModified);
        }
        Ok(SplitNonlinearity { g: self.clone() })
    }

    /// Numerical checks of (g1)–(g4) on the logarithmic scan range.
    pub fn check_hypotheses(&self) -> HypothesisReport {
        let continuous = log_scan(SCAN_MIN, SCAN_MAX, SCAN_POINTS)
            .all(|s| self.g(s).is_finite() && self.g(-s).is_finite());
        let slopes: Vec<f64> = MASS_PROBES.iter().map(|&s| self.g(s) / s).collect();
        let mass_ok = self.m > 0.0
            && (slopes[2] + self.m).abs() <= 0.05 * self.m
            && slopes.iter().all(|&v| v < 0.0);
        let growth_ok = growth_decays(|s| self.g(s));
        let zeta_ok = self.zeta.is_some_and(|z| self.primitive(z) > 0.0);
        HypothesisReport {
            continuous,
            mass: self.m,
            small_s_slopes: slopes,
            mass_ok,
            growth_ok,
            zeta: self.zeta,
            zeta_ok,
            s0: self.s0,
        }
    }
}

/// True if `f(s)/s⁵` is non-positive or still decreasing over the top decade
/// of the scan range.
fn growth_decays(f: impl Fn(f64) -> f64) -> bool {
    let top = f(SCAN_MAX) / SCAN_MAX.powi(5);
    let below = f(SCAN_MAX / 10.0) / (SCAN_MAX / 10.0).powi(5);
    top <= 0.0 || top < below * (1.0 - 1e-6)
}

/// Smallest scanned `s` with `G(s) > 0`, enlarged by 10% when that keeps
/// `G` positive.
fn select_zeta(family: &Family) -> Option<f64> {
    let first =
        log_scan(SCAN_MIN, SCAN_MAX, SCAN_POINTS).find(|&s| family.raw_primitive(s) > 0.0)?;
    let padded = 1.1 * first;
    Some(if family.raw_primitive(padded) > 0.0 {
        padded
    } else {
        first
    })
}

/// `min{s ≥ ζ : g(s) = 0}`, located by a sign scan and bisection.
fn first_zero_from(family: &Family, zeta: f64) -> f64 {
    let g0 = family.raw(zeta);
    if g0 == 0.0 {
        return zeta;
    }
    if zeta >= SCAN_MAX {
        return f64::INFINITY;
    }
    let mut prev = (zeta, g0);
    for s in log_scan(zeta, SCAN_MAX, SCAN_POINTS).skip(1) {
        let gs = family.raw(s);
        if gs == 0.0 {
            return s;
        }
        if gs.signum() != prev.1.signum() {
            let (mut lo, mut hi) = (prev.0, s);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if family.raw(mid).signum() == prev.1.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev = (s, gs);
    }
    f64::INFINITY
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub continuous: bool,
    pub mass: f64,
    pub small_s_slopes: Vec<f64>,
    pub mass_ok: bool,
    pub growth_ok: bool,
    pub zeta: Option<f64>,
    pub zeta_ok: bool,
    pub s0: f64,
}

impl HypothesisReport {
    pub fn admissible(&self) -> bool {
        self.continuous && self.mass_ok && self.growth_ok && self.zeta_ok
    }
}

/// `g₁(s) = (g(s) + ms)⁺` on `s ≥ 0`, zero on `s < 0`, and `g₂ = g₁ − g`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitNonlinearity {
    g: Nonlinearity,
}

impl SplitNonlinearity {
    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.g
    }

    pub fn m(&self) -> f64 {
        self.g.m
    }

    pub fn g(&self, s: f64) -> f64 {
        self.g.g(s)
    }

    pub fn primitive(&self, s: f64) -> f64 {
        self.g.primitive(s)
    }

    pub fn g1(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            (self.g.g(s) + self.g.m * s).max(0.0)
        }
    }

    pub fn g2(&self, s: f64) -> f64 {
        self.g1(s) - self.g.g(s)
    }

    pub fn big_g1(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            self.g.modified_positive_primitive(s)
        }
    }

    pub fn big_g2(&self, s: f64) -> f64 {
        self.big_g1(s) - self.g.primitive(s)
    }

    /// Scan estimate of `C_ε` in `g₁(s) ≤ C_ε s⁵ + ε g₂(s)`, `s ≥ 0`, with
    /// the integrated form `G₁ ≤ (C_ε/6) s⁶ + ε G₂` checked on `±` scans.
    pub fn epsilon_bound_certificate(
        &self,
        eps: f64,
    ) -> Result<EpsilonCertificate, NonlinearityError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(NonlinearityError::InvalidEpsilon(eps));
        }
        let top_ratio = self.g1(SCAN_MAX) / SCAN_MAX.powi(5);
        if top_ratio > 0.0 && !growth_decays(|s| self.g1(s)) {
            return Err(NonlinearityError::UnboundedRatio {
                s: SCAN_MAX,
                ratio: top_ratio,
            });
        }
        let mut c_eps = 0.0_f64;
        let mut argmax = None;
        for s in log_scan(SCAN_MIN, SCAN_MAX, SCAN_POINTS) {
            let ratio = (self.g1(s) - eps * self.g2(s)) / s.powi(5);
            if ratio > c_eps {
                c_eps = ratio;
                argmax = Some(s);
            }
        }
        for s in log_scan(SCAN_MIN, SCAN_MAX, SCAN_POINTS) {
            for x in [s, -s] {
                let bound = c_eps / 6.0 * x.powi(6) + eps * self.big_g2(x);
                let lhs = self.big_g1(x);
                if lhs > bound + 1e-9 * bound.abs().max(1e-300) {
                    return Err(NonlinearityError::IntegratedBoundViolated(x));
                }
            }
        }
        Ok(EpsilonCertificate { eps, c_eps, argmax })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonCertificate {
    pub eps: f64,
    pub c_eps: f64,
    /// Scan point attaining the supremum, if positive.
    pub argmax: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cubic() -> SplitNonlinearity {
        Nonlinearity::power(3.0).unwrap().modify().split().unwrap()
    }

    #[test]
    fn power_family_basics() {
        let g = Nonlinearity::power(3.0).unwrap();
        assert_eq!(g.m(), 1.0);
        assert!(g.s0().is_infinite());
        // G(1.5) = −1.125 + 5.0625/4
        assert_relative_eq!(g.primitive(1.5), 0.140625, epsilon = 1e-14);
        let zeta = g.zeta().unwrap();
        assert!(zeta > 2f64.sqrt() && zeta < 1.6, "zeta = {zeta}");
        assert!(g.check_hypotheses().admissible());
    }

    #[test]
    fn modified_negative_branch() {
        let g = Nonlinearity::power(3.0).unwrap().modify();
        assert_relative_eq!(g.g(-2.0), 2.0, epsilon = 1e-14);
        assert_eq!(g.g(0.0), 0.0);
        assert_relative_eq!(g.g(2.0), 6.0, epsilon = 1e-14);
        // G̃(s) = s²/2 on ℝ₋.
        assert_relative_eq!(g.primitive(-3.0), -4.5, epsilon = 1e-12);
    }

    #[test]
    fn modify_is_idempotent() {
        let g = Nonlinearity::tabulated(&[(0.0, 0.0), (0.5, -0.4), (1.5, 1.0), (3.0, -0.5)])
            .unwrap()
            .modify();
        let gg = g.modify();
        for s in log_scan(1e-3, 10.0, 500) {
            assert_eq!(g.g(s), gg.g(s));
            assert_eq!(g.g(-s), gg.g(-s));
        }
    }

    #[test]
    fn finite_s0_is_found_and_kills_the_tail() {
        // g(s) = −s + s³ − s⁵/10 vanishes again past ζ.
        let pts: Vec<(f64, f64)> = (0..=4000)
            .map(|k| {
                let s = k as f64 * 1e-3;
                (s, -s + s.powi(3) - 0.1 * s.powi(5))
            })
            .collect();
        let g = Nonlinearity::tabulated(&pts).unwrap();
        let s0 = g.s0();
        // Roots of −1 + s² − s⁴/10 are s² = 5 ∓ √15; only the larger one lies past ζ.
        assert_relative_eq!(s0, (5.0 + 15f64.sqrt()).sqrt(), epsilon = 1e-4);
        let gm = g.modify();
        assert_eq!(gm.g(s0 + 0.5), 0.0);
        assert_relative_eq!(gm.primitive(s0 + 0.5), gm.primitive(s0), epsilon = 1e-12);
    }

    #[test]
    fn split_of_cubic_power() {
        let sp = cubic();
        for &s in &[0.1, 0.7, 1.0, 2.5] {
            assert_relative_eq!(sp.g1(s), s * s * s, max_relative = 1e-13);
            assert_relative_eq!(sp.g2(s), s, max_relative = 1e-12);
            assert_relative_eq!(sp.big_g1(s), s.powi(4) / 4.0, max_relative = 1e-13);
            assert_relative_eq!(sp.big_g2(s), s * s / 2.0, max_relative = 1e-12);
        }
        assert_eq!(sp.g1(-1.0), 0.0);
    }

    #[test]
    fn split_requires_modification() {
        assert_eq!(
            Nonlinearity::power(3.0).unwrap().split(),
            Err(NonlinearityError::NotModified)
        );
    }

    #[test]
    fn split_inequalities_on_scan() {
        for p in [2.0, 3.0, 4.0] {
            let sp = Nonlinearity::power(p).unwrap().modify().split().unwrap();
            let m = sp.m();
            for k in 0..10_000 {
                let s = -10.0 + 20.0 * k as f64 / 9_999.0;
                assert!(
                    sp.big_g2(s) - 0.5 * m * s * s >= -1e-12 * (1.0 + sp.big_g1(s.abs())),
                    "p={p} s={s} {}",
                    sp.big_g2(s) - 0.5 * m * s * s
                );
                if s >= 0.0 {
                    assert!(sp.g2(s) >= m * s - 1e-12);
                    assert!(sp.g1(s) >= 0.0);
                }
                assert_relative_eq!(sp.g1(s) - sp.g2(s), sp.g(s), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn certificate_for_cubic_matches_calculus() {
        // sup (s³ − s/2)/s⁵ = sup s⁻² − s⁻⁴/2, attained at s = 1 with value 1/2.
        let cert = cubic().epsilon_bound_certificate(0.5).unwrap();
        assert_relative_eq!(cert.c_eps, 0.5, max_relative = 1e-6);
        assert_relative_eq!(cert.argmax.unwrap(), 1.0, max_relative = 2e-3);
    }

    #[test]
    fn certificate_rejects_critical_growth() {
        let sp = Nonlinearity::power(5.0).unwrap().modify().split().unwrap();
        assert!(matches!(
            sp.epsilon_bound_certificate(0.5),
            Err(NonlinearityError::UnboundedRatio { .. })
        ));
        assert!(
            !Nonlinearity::power(5.0)
                .unwrap()
                .check_hypotheses()
                .growth_ok
        );
    }

    #[test]
    fn certificate_vanishes_without_attraction() {
        let sp = Nonlinearity::pure_mass(1.0)
            .unwrap()
            .modify()
            .split()
            .unwrap();
        for eps in [0.1, 0.5, 0.9] {
            assert_eq!(sp.epsilon_bound_certificate(eps).unwrap().c_eps, 0.0);
        }
        assert!(!Nonlinearity::pure_mass(1.0)
            .unwrap()
            .check_hypotheses()
            .admissible());
    }

    #[test]
    fn certificate_rejects_bad_epsilon() {
        assert!(cubic().epsilon_bound_certificate(1.0).is_err());
        assert!(cubic().epsilon_bound_certificate(0.0).is_err());
    }

    #[test]
    fn tabulated_matches_power_on_knots() {
        let pts: Vec<(f64, f64)> = (0..=2000)
            .map(|k| {
                let s = k as f64 * 5e-3;
                (s, -s + s * s * s)
            })
            .collect();
        let tab = Nonlinearity::tabulated(&pts).unwrap().modify();
        let pow = Nonlinearity::power(3.0).unwrap().modify();
        assert_relative_eq!(tab.m(), 1.0, max_relative = 1e-4);
        for &s in &[0.5, 1.0, 2.0, 5.0] {
            assert_relative_eq!(tab.g(s), pow.g(s), max_relative = 1e-3);
            assert_relative_eq!(
                tab.primitive(s),
                pow.primitive(s),
                max_relative = 1e-3,
                epsilon = 1e-4
            );
        }
    }

    #[test]
    fn tabulated_primitives_are_exact_antiderivatives() {
        let g = Nonlinearity::tabulated(&[(0.0, 0.0), (0.3, -0.3), (1.0, 0.2), (2.0, 1.5)])
            .unwrap()
            .modify();
        let sp = g.split().unwrap();
        let h = 1e-6;
        for &s in &[-1.7, -0.2, 0.15, 0.65, 1.4, 2.6] {
            let dg = (g.primitive(s + h) - g.primitive(s - h)) / (2.0 * h);
            assert_relative_eq!(dg, g.g(s), epsilon = 1e-7);
            let dg1 = (sp.big_g1(s + h) - sp.big_g1(s - h)) / (2.0 * h);
            assert_relative_eq!(dg1, sp.g1(s), epsilon = 1e-7);
        }
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(Nonlinearity::tabulated(&[(0.0, 0.0)]).is_err());
        assert!(Nonlinearity::tabulated(&[(0.1, 0.0), (1.0, 1.0)]).is_err());
        assert!(Nonlinearity::tabulated(&[(0.0, 0.0), (1.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(Nonlinearity::tabulated(&[(0.0, 0.0), (1.0, f64::NAN)]).is_err());
        // positive slope at the origin: (g2) fails
        assert!(matches!(
            Nonlinearity::tabulated(&[(0.0, 0.0), (1.0, 1.0)]),
            Err(NonlinearityError::NonPositiveMass(_))
        ));
    }
}
