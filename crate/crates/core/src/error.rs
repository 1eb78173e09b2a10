use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("statistics of UE {ue} are not positive definite")]
    UeStatistics { ue: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("LSFD vector is identically zero")]
    ZeroVector,

    #[error("SINR denominator is not positive ({0:e}); statistics are inconsistent")]
    NonPositiveDenominator(f64),

    #[error("UE {0} has no serving AP")]
    EmptyServingSet(usize),

    #[error("line search step underflow in group {group}")]
    LineSearch { group: usize },

    #[error("total power must be positive, got {0}")]
    NonPositivePower(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
