use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unstable arrival process: jump {jump} >= decay {decay}")]
    UnstableProcess { jump: f64, decay: f64 },
    #[error("stable arrival process: jump {jump} < decay {decay}; use the stable routines")]
    StableProcess { jump: f64, decay: f64 },
    #[error("gap {gap:e} too close to a singular case")]
    NearSingularGap { gap: f64 },
    #[error("moment order {requested} exceeds cap {cap}")]
    OrderCapExceeded { requested: usize, cap: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is numerically singular")]
    SingularMatrix,
    #[error("shifted matrix is numerically singular (shift {shift})")]
    SingularShiftedMatrix { shift: f64 },
    #[error("matrix is not Hurwitz (max eigenvalue real part {max_real})")]
    NonHurwitz { max_real: f64 },
    #[error("invalid sub-generator: {0}")]
    InvalidSubGenerator(String),
    #[error("invalid initial distribution: {0}")]
    InvalidInitialDist(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cumulant generating function blew up at z = {z}")]
    CgfBlowup { z: f64 },
    #[error("event cap of {cap} exceeded")]
    EventCapExceeded { cap: usize },
    #[error("need at least 2 replications, got {0}")]
    InsufficientReps(usize),
    #[error("objective is degenerate: w = c = 0")]
    DegenerateObjective,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
