use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("operator is not positive semidefinite (curvature {curvature:e})")]
    IndefiniteOperator { curvature: f64 },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("frame is rank deficient: rank {rank} < {n}")]
    RankDeficient { rank: usize, n: usize },

    #[error("frame needs m >= n vectors (n = {n}, m = {m})")]
    TooFewVectors { n: usize, m: usize },

    #[error("real-tagged frame has nonzero imaginary parts")]
    NotReal,

    #[error("combinatorial budget exceeded: {required} subsets, cap {cap}")]
    CombinatorialBudgetExceeded { required: u128, cap: u128 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("realified vector has odd length {0}")]
    OddDimension(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("zero vector where a nonzero one is required")]
    ZeroVector,

    #[error("anchor vector is orthogonal to the signal")]
    OrthogonalAnchor,

    #[error("frame is not phase retrievable: {0}")]
    NotPhaseRetrievable(String),

    #[error("lifted frame does not span Sym(C^n): rank {rank} < {required}")]
    InsufficientRedundancy { rank: usize, required: usize },

    #[error("quadrature did not converge for argument {argument}")]
    NonConvergentQuadrature { argument: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }
}
