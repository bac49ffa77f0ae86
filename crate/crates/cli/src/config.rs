//! TOML run configuration.
//!
//! ```toml
//! [nonlinearity]
//! family = "power"        # or "tabulated" with `points = [[0, 0], [s, g], ...]`
//! p = 3.0
//!
//! [solver]
//! q = 0.1
//! t = "auto"              # or a positive number
//!
//! [grid]
//! r_max = 30.0
//! n = 3000
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every key has a default. Only the output directory and the thread count
//! can be overridden from the environment (`SP_OUT_DIR`, `SP_THREADS`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smpoisson::mountainpass::{RefineSettings, Tolerances};
use smpoisson::{Nonlinearity, RadialGrid, SolverSettings, TruncationLevel};

use crate::error::CliError;

pub const ENV_OUT_DIR: &str = "SP_OUT_DIR";
pub const ENV_THREADS: &str = "SP_THREADS";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub nonlinearity: NonlinearityConfig,
    pub solver: SolverSection,
    pub grid: GridSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
    pub verify: VerifySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    /// `"power"` or `"tabulated"`.
    pub family: String,
    pub p: f64,
    pub mass: f64,
    pub coeff: f64,
    /// `(s, g(s))` knots for the tabulated family.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TSetting {
    Value(f64),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub q: f64,
    pub t: TSetting,
    pub path_points: usize,
    pub depth: usize,
    pub tol_grad: f64,
    pub tol_poho: f64,
    pub tol_pde: f64,
    pub max_sweeps: usize,
    pub floor_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub r_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `"q"`, `"T"` or `"p"`.
    pub parameter: String,
    pub values: Vec<f64>,
    /// Extra solves spent narrowing the first-failure bracket of a q-sweep.
    pub bisect_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub seed: u64,
    /// Multiplies every tolerance of the invariant suite.
    pub tolerance_scale: f64,
    /// Grid for the quadrature-sensitive checks.
    pub r_max: f64,
    pub n: usize,
    /// `"quintic"`, or `"steep"` to check that the suite catches a cutoff
    /// with `sup|χ′| > 2`.
    pub cutoff: String,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            family: "power".into(),
            p: 3.0,
            mass: 1.0,
            coeff: 1.0,
            points: Vec::new(),
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            q: 0.1,
            t: TSetting::Word("auto".into()),
            path_points: s.path_points,
            depth: s.depth,
            tol_grad: s.tolerances.grad,
            tol_poho: s.tolerances.pohozaev,
            tol_pde: s.tolerances.pde,
            max_sweeps: s.refine.max_sweeps,
            floor_eps: s.floor_eps,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            r_max: smpoisson::grid::DEFAULT_R_MAX,
            n: smpoisson::grid::DEFAULT_NODES,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            parameter: "q".into(),
            values: vec![0.0, 0.05, 0.1],
            bisect_steps: 4,
        }
    }
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance_scale: 1.0,
            r_max: 10.0,
            n: 10_001,
            cutoff: "quintic".into(),
        }
    }
}

impl SolverConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `SP_OUT_DIR` and `SP_THREADS`.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(dir) = std::env::var(ENV_OUT_DIR) {
            self.output.dir = PathBuf::from(dir);
        }
        if let Ok(raw) = std::env::var(ENV_THREADS) {
            let n = raw.parse().map_err(|_| {
                CliError::Config(format!(
                    "{ENV_THREADS} must be a positive integer, got {raw:?}"
                ))
            })?;
            self.output.threads = Some(n);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let s = &self.solver;
        if !(s.q.is_finite() && s.q >= 0.0) {
            return bad(format!("solver.q must be >= 0, got {}", s.q));
        }
        self.truncation()?;
        for (name, v) in [
            ("tol_grad", s.tol_grad),
            ("tol_poho", s.tol_poho),
            ("tol_pde", s.tol_pde),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("solver.{name} must be > 0, got {v}"));
            }
        }
        if s.path_points < 8 {
            return bad(format!(
                "solver.path_points must be >= 8, got {}",
                s.path_points
            ));
        }
        if !(s.floor_eps > 0.0 && s.floor_eps < 1.0) {
            return bad(format!(
                "solver.floor_eps must lie in (0, 1), got {}",
                s.floor_eps
            ));
        }
        if self.output.threads == Some(0) {
            return bad("output.threads must be positive".into());
        }
        if !(self.verify.tolerance_scale.is_finite() && self.verify.tolerance_scale > 0.0) {
            return bad(format!(
                "verify.tolerance_scale must be > 0, got {}",
                self.verify.tolerance_scale
            ));
        }
        if !matches!(self.verify.cutoff.as_str(), "quintic" | "steep") {
            return bad(format!(
                "verify.cutoff must be \"quintic\" or \"steep\", got {:?}",
                self.verify.cutoff
            ));
        }
        if !matches!(self.sweep.parameter.as_str(), "q" | "T" | "p") {
            return bad(format!(
                "sweep.parameter must be q, T or p, got {:?}",
                self.sweep.parameter
            ));
        }
        self.grid()?;
        self.build_nonlinearity()?;
        Ok(())
    }

    pub fn truncation(&self) -> Result<TruncationLevel, CliError> {
        match &self.solver.t {
            TSetting::Value(t) if t.is_finite() && *t > 0.0 => Ok(TruncationLevel::Fixed(*t)),
            TSetting::Word(w) if w == "auto" => Ok(TruncationLevel::Auto),
            other => Err(CliError::Config(format!(
                "solver.t must be \"auto\" or > 0, got {other:?}"
            ))),
        }
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>, CliError> {
        RadialGrid::new(self.grid.r_max, self.grid.n)
            .map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn build_nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        let nl = &self.nonlinearity;
        let built = match nl.family.as_str() {
            "power" => Nonlinearity::power_with(nl.p, nl.mass, nl.coeff),
            "tabulated" => {
                let points: Vec<(f64, f64)> = nl.points.iter().map(|&[s, g]| (s, g)).collect();
                Nonlinearity::tabulated(&points)
            }
            other => {
                return Err(CliError::Config(format!(
                    "nonlinearity.family must be \"power\" or \"tabulated\", got {other:?}"
                )))
            }
        };
        built.map_err(|e| CliError::Config(format!("nonlinearity: {e}")))
    }

    pub fn settings(&self) -> SolverSettings {
        let s = &self.solver;
        let defaults = SolverSettings::default();
        SolverSettings {
            depth: s.depth,
            path_points: s.path_points,
            floor_eps: s.floor_eps,
            refine: RefineSettings {
                max_sweeps: s.max_sweeps,
                ..defaults.refine
            },
            tolerances: Tolerances {
                grad: s.tol_grad,
                pohozaev: s.tol_poho,
                pde: s.tol_pde,
                ..defaults.tolerances
            },
        }
    }
}
