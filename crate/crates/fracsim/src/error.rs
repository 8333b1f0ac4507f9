use thiserror::Error;

/// Errors shared across the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("grid must have at least 4 points, got {0}")]
    GridTooSmall(usize),

    #[error("grid spacing must be positive, got {0}")]
    BadSpacing(f64),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("fractional order must lie in (0, 1], got {0}")]
    BadOrder(f64),

    #[error("cascade depth must be in 1..=4, got {0}")]
    BadDepth(usize),

    #[error("insufficient time history: need at least {needed} levels, have {have}")]
    InsufficientHistory { needed: usize, have: usize },

    #[error("numerical instability at step {step}: max |psi| = {max_abs:.3e}")]
    Instability { step: usize, max_abs: f64 },

    #[error("time step {dt:.3e} violates the explicit stability bound {bound:.3e}")]
    UnstableDt { dt: f64, bound: f64 },

    #[error("scheme {scheme} is incompatible with beta = {beta}")]
    IncompatibleScheme { scheme: &'static str, beta: f64 },

    #[error("polar decomposition failed: amplitude is below the node threshold everywhere")]
    AllNodes,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
