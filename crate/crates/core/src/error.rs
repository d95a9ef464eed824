//! Error type shared across the simulator.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not Hermitian (max |H - H†| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("site label exceeds basis truncation: {0}")]
    TruncationExceeded(String),

    #[error("state preparation lost too much norm: retained {retained:.12} < {required}")]
    InsufficientTruncation { retained: f64, required: f64 },

    #[error("integrator step underflow at t = {t} (step {step:.3e} below minimum)")]
    StepUnderflow { t: f64, step: f64 },

    #[error("state norm/trace drifted to {weight:.9} at t = {t} (tolerance {tol:.1e})")]
    WeightDrift { t: f64, weight: f64, tol: f64 },

    #[error("density matrix lost positivity at t = {t}: min eigenvalue {min_eig:.3e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("Wigner grid captures only {captured:.6} of the state norm (need >= 0.999)")]
    WignerGridTooSmall { captured: f64 },

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("scan found no fidelity peak >= {threshold} for N = {n} in the given range")]
    NoPeakFound { n: usize, threshold: f64 },

    #[error("least-squares fit failed: {0}")]
    FitFailed(String),

    #[error("output path {0} already exists (pass --force to overwrite)")]
    OutputCollision(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI contract: 2 for configuration
    /// problems, 3 for numerical failures and I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::OutputCollision(_) => 2,
            _ => 3,
        }
    }
}
