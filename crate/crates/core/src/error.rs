use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which factor of a bipartite space an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    System,
    Reservoir,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // Linear algebra kernels
    #[error("matrix is not hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("eigensolver did not converge within its iteration budget")]
    ConvergenceFailure,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("columns are not orthonormal (gram residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },
    #[error("columns are not pseudo-orthonormal under the metric (gram residual {residual:.3e})")]
    NotPseudoOrthonormal { residual: f64 },
    #[error("indefinite completion met a null candidate vector (|v'ηv| = {value:.3e})")]
    NullVectorEncountered { value: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,

    // States
    #[error("trace is {trace} instead of 1 (unit-trace constraint)")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not positive: minimum eigenvalue {min_eigenvalue:.3e} (positivity constraint)")]
    NotPositive { min_eigenvalue: f64 },
    #[error("rank {rank} is not in 1..={dim}")]
    BadRank { rank: usize, dim: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid reservoir state: {0}")]
    BadReservoir(String),

    // Maps
    #[error("side {side} is not a perfect square")]
    NotPerfectSquare { side: usize },
    #[error("map is not hermiticity-preserving (residual {residual:.3e})")]
    NotHermiticityPreserving { residual: f64 },
    #[error("bad convex weights: {0}")]
    BadWeights(String),

    // Decomposition / parameterization
    #[error("trace condition violated (residual {residual:.3e})")]
    TraceConditionViolated { residual: f64 },
    #[error("sinh φ vanishes on directions {directions:?} where the negative-part operators do not")]
    SinhDegenerate { directions: Vec<usize> },
    #[error("operator family is not a resolution of the identity (residual {residual:.3e})")]
    NotResolution { residual: f64 },
    #[error("stage {stage}: a single operator with cos²θ₁ = {cos2:.6} < 1 cannot be normalized")]
    InsufficientOperators { stage: usize, cos2: f64 },
    #[error("bad arguments: {0}")]
    BadArguments(String),

    // Dilations
    #[error("map is not completely positive ({negative} negative Choi eigenvalues)")]
    NotCompletelyPositive { negative: usize },
    #[error("not applicable: {0}")]
    NotApplicable(String),

    // Registries
    #[error("unknown {registry} `{name}` (known: {known})")]
    UnknownStrategy {
        registry: &'static str,
        name: String,
        known: String,
    },
    #[error("sampling failed after {attempts} attempts: {reason}")]
    SamplingExhausted { attempts: usize, reason: String },
}
