//! Radial ground states of the Schrödinger–Poisson system
//! `−Δu + qφu = g(u)`, `−Δφ = qu²` on ℝ³, by a truncated mountain-pass
//! continuation.

pub mod error;
pub mod functional;
pub mod grid;
pub mod linalg;
pub mod mountainpass;
pub mod nonlinearity;
pub mod poisson;

pub use error::{GridError, NonlinearityError, SolverError};
pub use functional::{EnergyBreakdown, Functional, QuinticCutoff, TruncationConfig};
pub use grid::{RadialFunction, RadialGrid};
pub use mountainpass::{
    certify, continuation_run, Certificate, SolveError, SolveResult, SolverSettings,
    TruncationLevel,
};
pub use nonlinearity::{Nonlinearity, SplitNonlinearity};
pub use poisson::{solve_poisson, PoissonField};

/// Exponent of the norm that drives the truncation, `12/5`.
pub const ALPHA: f64 = 12.0 / 5.0;
