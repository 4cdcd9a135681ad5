use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("two-level Hamiltonian is degenerate (delta = lambda = 0)")]
    DegenerateHamiltonian,

    #[error("boundary-condition system is singular")]
    SingularSystem,

    #[error("sin(phi) vanishes at interior time t = {t:e} s")]
    IndeterminateInterior { t: f64 },

    #[error("time step too coarse: max |H| dt / hbar = {phase:.3} (limit 0.1)")]
    StepTooCoarse { phase: f64 },

    #[error("grid too narrow: level {level} boundary/peak amplitude ratio {ratio:e}")]
    GridTooNarrow { level: usize, ratio: f64 },

    #[error("eigensolver did not converge: {0}")]
    NonConverged(String),

    #[error("inconsistent two-level extraction: {0}")]
    InconsistentExtraction(String),

    #[error("sample {index} (t = {t:e} s) cannot be mapped: residual {residual:e} exceeds tolerance")]
    UnmappableSample { index: usize, t: f64, residual: f64 },

    #[error("propagation not converged in dt: fidelity change {change:e} at dt = {dt:e} s")]
    NotConverged { dt: f64, change: f64 },

    #[error("tunneling not suppressed before bias flip: delta = {delta:e} rad/s")]
    TunnelingNotSuppressed { delta: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
