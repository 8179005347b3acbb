use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("diffusion coefficient is not positive: p({x}) = {value}")]
    NonPositiveDiffusion { x: f64, value: f64 },

    #[error("reaction coefficient is negative: q({x}) = {value}")]
    NegativeReaction { x: f64, value: f64 },

    #[error("{n_max} modes need at least {required} grid points, got {grid_points}")]
    ResolutionTooCoarse {
        n_max: usize,
        grid_points: usize,
        required: usize,
    },

    #[error("eigensolver failed on mode {mode}: {reason}")]
    EigensolveFailure { mode: usize, reason: String },

    #[error("grid function has {got} samples, basis grid has {expected}")]
    GridMismatch { expected: usize, got: usize },

    #[error("function violates the boundary conditions: {0}")]
    BoundaryViolation(String),

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tail sum {name} not converged: remainder bound {bound:e} exceeds tolerance {tolerance:e}")]
    TailNotConverged { name: String, bound: f64, tolerance: f64 },

    #[error("basis holds {available} modes, {required} needed")]
    InsufficientModes { available: usize, required: usize },

    #[error("pair is not controllable (smallest singular value ratio {ratio:e})")]
    Uncontrollable { ratio: f64 },

    #[error("controllability matrix is ill conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("Cauchy condition fails: |f'(0)| = {value:e}")]
    CauchyConditionFailed { value: f64 },

    #[error("ODE integration failed: {0}")]
    IntegrationFailure(String),

    #[error("matrix is not Hurwitz after shift (max real part {max_real:e})")]
    NotHurwitz { max_real: f64 },

    #[error("linear system is singular: {0}")]
    SolveSingular(String),

    #[error("alpha must exceed 1, got {alpha}")]
    AlphaTooSmall { alpha: f64 },

    #[error("no feasible certificate for N <= {n_max}")]
    NotFeasibleUpToNMax {
        n_max: usize,
        attempts: Vec<CertificateAttempt>,
    },

    #[error("closed-loop matrix A1 + B1 K is singular")]
    SingularClosedLoop,

    #[error("state norm exceeded {limit:e} at t = {time}")]
    Instability { time: f64, limit: f64 },

    #[error("initial condition incompatible with the boundary conditions: {0}")]
    IncompatibleInitialCondition(String),

    #[error("fit window too short: {0}")]
    WindowTooShort(String),
}

/// Best margins found for one observer order during the N search.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CertificateAttempt {
    pub n: usize,
    pub theta_max_eig: f64,
    pub gamma_n_margin: f64,
    pub note: String,
}
