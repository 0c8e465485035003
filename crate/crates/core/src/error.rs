use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: factors {factors:?} do not compose to dimension {dim}")]
    ShapeMismatch { factors: Vec<usize>, dim: usize },

    #[error("matrix is not Hermitian: defect {defect:e} exceeds tolerance {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("not a density operator: {reason} (tolerance {tol:e})")]
    InvalidDensity { reason: String, tol: f64 },

    #[error("not a valid state vector: norm deviates by {defect:e} (tolerance {tol:e})")]
    InvalidStateVector { defect: f64, tol: f64 },

    #[error("subspace basis is not orthonormal: defect {defect:e} (tolerance {tol:e})")]
    InvalidSubspace { defect: f64, tol: f64 },

    #[error("Kraus operators are not trace non-increasing: max eigenvalue of sum A^dag A is {max_eig} (tolerance {tol:e})")]
    InvalidKraus { max_eig: f64, tol: f64 },

    #[error("parameter out of range: {0}")]
    ParameterRange(String),

    #[error("empty typical projector (delta too small for the given blocklength)")]
    EmptyTypicalProjector,

    #[error("empty compound set")]
    EmptySet,

    #[error("size budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("empty rate plan: min coherent information {min_ic} minus epsilon {epsilon} is not positive")]
    EmptyPlan { min_ic: f64, epsilon: f64 },

    #[error("channel output has zero trace")]
    ZeroTraceOutput,

    #[error("eigensolver failed to converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    EigNonConvergence { sweeps: usize, off: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;
