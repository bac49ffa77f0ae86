//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Radial shooting for `−u'' − (2/r)u' = −u + u³`, `u'(0) = 0`, `u → 0`.
pub struct ShootingSolution {
    pub u0: f64,
    pub step: f64,
    /// `u` on `r_k = k·step`, truncated where the trajectory starts to
    /// leave the decaying branch.
    pub values: Vec<f64>,
}

fn rhs(r: f64, u: f64, du: f64) -> (f64, f64) {
    (du, u - u * u * u - 2.0 * du / r)
}

enum Fate {
    Overshoot,
    Undershoot,
}

fn trajectory(a: f64, step: f64, r_end: f64, keep: bool) -> (Fate, Vec<f64>) {
    // series start u = a + (a − a³)r²/6
    let r0 = step;
    let c = (a - a * a * a) / 6.0;
    let (mut r, mut u, mut du) = (r0, a + c * r0 * r0, 2.0 * c * r0);
    let mut out = if keep { vec![a, u] } else { Vec::new() };
    while r < r_end {
        let h = step;
        let (k1u, k1v) = rhs(r, u, du);
        let (k2u, k2v) = rhs(r + h / 2.0, u + h / 2.0 * k1u, du + h / 2.0 * k1v);
        let (k3u, k3v) = rhs(r + h / 2.0, u + h / 2.0 * k2u, du + h / 2.0 * k2v);
        let (k4u, k4v) = rhs(r + h, u + h * k3u, du + h * k3v);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        r += h;
        if u < 0.0 {
            return (Fate::Overshoot, out);
        }
        if du > 0.0 {
            return (Fate::Undershoot, out);
        }
        if keep {
            out.push(u);
        }
    }
    (Fate::Undershoot, out)
}

pub fn shoot_cubic(step: f64) -> ShootingSolution {
    let (mut lo, mut hi) = (3.0_f64, 5.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match trajectory(mid, step, 40.0, false).0 {
            Fate::Overshoot => hi = mid,
            Fate::Undershoot => lo = mid,
        }
    }
    let u0 = 0.5 * (lo + hi);
    let (_, mut values) = trajectory(u0, step, 40.0, true);
    // Drop the last stretch where the shot drifts off the decaying branch.
    let cut = values
        .iter()
        .rposition(|&v| v > 1e-6)
        .unwrap_or(values.len());
    values.truncate(cut);
    ShootingSolution { u0, step, values }
}

impl ShootingSolution {
    /// `u(r)`, linear interpolation, zero beyond the kept range.
    pub fn eval(&self, r: f64) -> f64 {
        let x = r / self.step;
        let k = x.floor() as usize;
        if k + 1 >= self.values.len() {
            return 0.0;
        }
        let t = x - k as f64;
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }

    /// `(½∫|∇u|², ∫u², ∫u⁴)` over ℝ³ by the composite trapezoid rule.
    pub fn integrals(&self) -> (f64, f64, f64) {
        let h = self.step;
        let n = self.values.len();
        let (mut kin, mut l2, mut l4) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let r = k as f64 * h;
            let w = if k == 0 || k == n - 1 { 0.5 * h } else { h };
            let u = self.values[k];
            let du = if k == 0 {
                0.0
            } else if k == n - 1 {
                (u - self.values[k - 1]) / h
            } else {
                (self.values[k + 1] - self.values[k - 1]) / (2.0 * h)
            };
            kin += w * r * r * du * du;
            l2 += w * r * r * u * u;
            l4 += w * r * r * u.powi(4);
        }
        (2.0 * PI * kin, 4.0 * PI * l2, 4.0 * PI * l4)
    }

    /// `½∫|∇u|² + ½∫u² − ¼∫u⁴`.
    pub fn energy(&self) -> f64 {
        let (half_kin, l2, l4) = self.integrals();
        half_kin + 0.5 * l2 - 0.25 * l4
    }
}
