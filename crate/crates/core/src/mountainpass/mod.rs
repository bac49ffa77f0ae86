//! Mountain-pass search for critical points of `I_{q,λ}^T` and the
//! `λ ↗ 1` continuation that turns them into solutions of the untruncated
//! problem.

mod certify;
mod continuation;
mod path;
mod refine;

use serde::Serialize;

use crate::grid::RadialFunction;

pub use certify::{certify, Certificate, CertificateCheck, Tolerances};
pub use continuation::{
    continuation_run, SolveError, SolveResult, SolverSettings, TruncationLevel,
};
pub use path::{
    build_path, build_reference_profile, minimax_level, ray_path, splice_path, LevelFloor,
    MinimaxLevel, ReferenceProfile, SOBOLEV_CONSTANT,
};
pub use refine::{
    deform_and_refine, newton_refine, ray_descent, ray_peak, NewtonOutcome, RefineSettings,
};

/// One row of the continuation log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRecord {
    pub lambda: f64,
    /// Running upper bound for `c_λ`.
    pub c_lambda: f64,
    /// Energy of the accepted critical point, if any.
    pub critical_energy: Option<f64>,
    pub grad_norm: f64,
    pub pohozaev: Option<f64>,
    pub floor: f64,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub lambda: f64,
    /// `path[0] = 0`, last point of negative energy.
    pub path: Vec<RadialFunction>,
    pub c_lambda: f64,
    pub iterate: Option<RadialFunction>,
    pub grad_norm: f64,
    pub converged: bool,
    /// Sweeps spent in the last call to [`deform_and_refine`].
    pub sweeps: usize,
    pub floor: LevelFloor,
    pub history: Vec<LambdaRecord>,
}
