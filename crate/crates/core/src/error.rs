use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("grid needs at least 4 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("H1 Gram factorization broke down: grid is ill-conditioned")]
    IllConditioned,
    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("Lebesgue exponent must satisfy s >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("dilation factor must be positive, got {0}")]
    InvalidScale(f64),
    #[error("dilated support reaches r = {reach:.3}, beyond r_max = {r_max}; enlarge the grid")]
    SupportOverflow { reach: f64, r_max: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("power exponent must be finite and > 1, got {0}")]
    InvalidExponent(f64),
    #[error("mass must be positive, got {0}")]
    InvalidMass(f64),
    #[error("nonlinearity table: {0}")]
    InvalidTable(String),
    #[error("estimated mass m = {0} is not positive: hypothesis (g2) fails")]
    NonPositiveMass(f64),
    #[error("split requires the modified nonlinearity")]
    NotModified,
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("g1(s)/s^5 does not decay at large s (ratio {ratio:.3e} at s = {s}): subcritical growth fails")]
    UnboundedRatio { s: f64, ratio: f64 },
    #[error("integrated bound G1 <= C/6 s^6 + eps G2 violated at s = {0}")]
    IntegratedBoundViolated(f64),
    #[error("no s in the scan range with G(s) > 0: hypothesis (g4) fails")]
    NoPositivePrimitive,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error("coupling q must be >= 0, got {0}")]
    InvalidCoupling(f64),
    #[error("truncation level T must be positive, got {0}")]
    InvalidTruncation(f64),
    #[error("lambda must lie in [delta_bar, 1], got {0}")]
    InvalidLambda(f64),
    #[error("no plateau radius up to r_max/2 gives ∫G(z) > 0 and a negative-energy dilation: grid too small or nonlinearity inadmissible")]
    ReferenceProfile,
    #[error("path endpoint energy {0:.6e} is not negative: path not admissible")]
    PathNotAdmissible(f64),
    #[error("path needs at least 3 points, got {0}")]
    PathTooShort(usize),
}
