use thiserror::Error;

/// Failures raised by the dense kernels in [`crate::linalg`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("QR iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("interpolation point collides with plant pole (relative pivot {pivot:.3e})")]
    SpectraCollide { pivot: f64 },

    #[error("equation residual {residual:.3e} exceeds bound {bound:.3e}")]
    Residual { residual: f64, bound: f64 },

    #[error("matrix is not Hurwitz (spectral abscissa {0:.6e})")]
    NotHurwitz(f64),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("linear system is singular")]
    Singular,

    #[error("matrix exponential overflowed (norm {0:.3e})")]
    Overflow(f64),
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("standing assumption violated: {0}")]
    Assumption(String),

    #[error("interpolation point collides with reduced-model pole: min separation {0:.3e}")]
    RomCollision(f64),

    #[error("observer uncertified: pick different G/K (spectral abscissa {0:.6e})")]
    Uncertified(f64),

    #[error("pole placement failed: {0}")]
    Placement(String),

    #[error(
        "regressor matrix is rank deficient (rank {rank} < {expected}); sample grid too short for the generator modes"
    )]
    RankDeficient { rank: usize, expected: usize },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("integration step too large: h * spectral radius = {0:.3} >= 2")]
    StepTooLarge(f64),

    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),

    #[error("degenerate signal: {0}")]
    Degenerate(String),

    #[error("internal check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
