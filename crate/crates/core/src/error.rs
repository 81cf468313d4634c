use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {requested} exceeds the supported maximum of {max}")]
    DimensionLimit { requested: usize, max: usize },

    #[error("dimension {dim} is not divisible by factor dimension {factor}")]
    NotDivisible { dim: usize, factor: usize },

    #[error("operator is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("basis is not orthonormal (max Gram deviation {deviation:.3e})")]
    NonOrthonormal { deviation: f64 },

    #[error("moment order k = {0} is not supported (expected 2 or 3)")]
    UnsupportedOrder(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "degenerate decomposition at d = {d}, alpha = {alpha}: d - 2 + alpha vanishes, \
         use the spectral channel description instead"
    )]
    DegenerateDecomposition { d: usize, alpha: f64 },

    #[error("observable is outside the visible space: {0}")]
    InvisibleObservable(String),

    #[error("need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },

    #[error("invalid outcome distribution: {0}")]
    Probability(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
