use std::path::PathBuf;

/// Errors raised by the numerical laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value produced at site {site}")]
    NonFinite { site: usize },
    #[error("Gamma function pole at {0}")]
    GammaPole(f64),
    #[error("order {0} out of range (need nu > -1/2)")]
    OrderOutOfRange(f64),
    #[error("frequency support {needed} exceeds the admissible band {limit} (largest admissible j: {max_j:?})")]
    SupportExceedsNyquist {
        needed: f64,
        limit: f64,
        max_j: Option<u32>,
    },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("dilation discarded {fraction:e} of the L2 mass")]
    DilationLoss { fraction: f64 },
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("family is not of the declared kind: {0}")]
    InfeasibleFamily(String),
    #[error("solver did not converge after {iterations} iterations at site {site} (best value {best_value})")]
    SolverNonConvergence {
        site: usize,
        iterations: usize,
        best_value: f64,
    },
    #[error("malformed field file {path:?}: {reason}")]
    Format { path: Option<PathBuf>, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerics (solver, aliasing) rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverNonConvergence { .. }
                | Error::SupportExceedsNyquist { .. }
                | Error::DilationLoss { .. }
                | Error::NonFinite { .. }
                | Error::GridTooCoarse(_)
        )
    }
}
