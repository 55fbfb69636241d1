use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A documented precondition of an operation was not met.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} outside supported range 1..=8")]
    DimensionTooLarge(usize),

    /// The raw SME update produced an eigenvalue far below zero; dt is too
    /// large for the configured k·δx².
    #[error("step size too large: raw eigenvalue {min_eigenvalue:.3e} below -1e-6")]
    StepSize { min_eigenvalue: f64 },

    /// Refused before integrating: dt exceeds the stability heuristic
    /// `dt <= 1e-3 / (k δx²)`.
    #[error("dt = {dt:.3e} exceeds stability limit {limit:.3e} = 1e-3/(k δx²)")]
    StepTooLarge { dt: f64, limit: f64 },

    /// Coupled small eigenvalues are too close for the perturbative drift.
    /// The rapid-swap (averaged) integrator covers this regime.
    #[error(
        "eigenvalues {i} and {j} are degenerate (gap {gap:.3e}) but coupled; \
         use the swap-averaged integrator"
    )]
    Degeneracy { i: usize, j: usize, gap: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
