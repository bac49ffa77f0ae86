use serde::Serialize;

use crate::functional::{riesz_and_norm, Functional};
use crate::grid::RadialFunction;
use crate::nonlinearity::SplitNonlinearity;
use crate::poisson::{poisson_residual, solve_poisson};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub grad: f64,
    pub pohozaev: f64,
    pub poisson_identity: f64,
    pub pde: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grad: 1e-7,
            pohozaev: 1e-3,
            poisson_identity: 1e-6,
            pde: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub checks: Vec<CertificateCheck>,
    pub passed: bool,
    /// First failing check, if any.
    pub failure: Option<String>,
}

impl Certificate {
    pub fn check(&self, name: &str) -> Option<&CertificateCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for Certificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "status = {}",
            if self.passed { "PASS" } else { "FAILED" }
        )?;
        if let Some(reason) = &self.failure {
            writeln!(f, "failure = {reason}")?;
        }
        for c in &self.checks {
            writeln!(
                f,
                "{} = {:.6e} (tol {:.1e}) {}",
                c.name,
                c.value,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Checks `u` against the untruncated problem at `λ = 1`.
pub fn certify(
    u: &RadialFunction,
    split: &SplitNonlinearity,
    q: f64,
    tol: &Tolerances,
) -> Certificate {
    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, tolerance: f64, passed: bool| {
        checks.push(CertificateCheck {
            name: name.to_string(),
            value,
            tolerance,
            passed,
        })
    };
    let grid = u.grid();
    let n = grid.len();
    let amplitude = u.max_abs();
    push("nontrivial", amplitude, 1e-8, amplitude > 1e-8);
    let trivial = amplitude <= 1e-8;

    let functional = Functional::new(split.clone(), q, None).expect("q validated by caller");
    let field = solve_poisson(u, q);
    let dual = functional.gradient_terms_with(u, &field, 1.0).total();
    let (_, grad) = riesz_and_norm(u, &dual);
    push("grad_residual", grad, tol.grad, grad <= tol.grad);

    let poho = functional.pohozaev_residual(u, 1.0);
    push(
        "pohozaev_residual",
        poho,
        tol.pohozaev,
        poho <= tol.pohozaev,
    );

    let identity = if q == 0.0 || field.interaction == 0.0 {
        0.0
    } else {
        (field.d12_norm_sq - q * field.interaction).abs() / (q * field.interaction)
    };
    push(
        "poisson_identity",
        identity,
        tol.poisson_identity,
        identity <= tol.poisson_identity,
    );

    let positivity = u.values()[..n - 1]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    push("positivity", positivity, 0.0, positivity > 0.0);

    let s0 = split.nonlinearity().s0();
    let window = if s0.is_finite() { amplitude / s0 } else { 0.0 };
    push("s0_window", window, 1.0, window < 1.0);

    // Schrödinger equation: nodal derivative divided by the node mass is
    // the discrete −Δu + qφu − g(u).
    let lap = grid.neg_laplacian(u.values());
    let mass = grid.mass();
    let (mut res, mut scale) = (0.0, 0.0);
    for i in grid.free_nodes() {
        let v = u.values()[i];
        let r = dual[i] / mass[i];
        let size = lap[i].abs() + (q * field.phi()[i] * v).abs() + split.g(v).abs();
        res += mass[i] * r * r;
        scale += mass[i] * size * size;
    }
    let schrodinger = if scale > 0.0 {
        (res / scale).sqrt()
    } else {
        0.0
    };
    push(
        "pde_residual_u",
        schrodinger,
        tol.pde,
        schrodinger <= tol.pde,
    );

    let poisson = poisson_residual(u, &field);
    push("pde_residual_phi", poisson, tol.pde, poisson <= tol.pde);

    let failure = if trivial {
        Some("trivial solution".to_string())
    } else {
        checks
            .iter()
            .find(|c| !c.passed)
            .map(|c| format!("{} = {:.6e} exceeds {:.1e}", c.name, c.value, c.tolerance))
    };
    Certificate {
        passed: failure.is_none(),
        checks,
        failure,
    }
}
