use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("moment order a + b = {order} exceeds the supported ceiling {ceiling}")]
    UnsupportedOrder { order: u32, ceiling: u32 },

    #[error("infeasible distribution: {0}")]
    Infeasible(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid ensemble: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range 1..={max} ({what})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("matrix is not Hermitian (defect {defect:e}, tolerance {tolerance:e})")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("eigensolver failed to converge{}", seed.map(|s| format!(" (matrix seed {s})")).unwrap_or_default())]
    NoConvergence { seed: Option<u64> },

    #[error("eigenvalue {index} is not simple (nearest gap {gap:e})")]
    DegenerateSpectrum { index: usize, gap: f64 },

    #[error("vector norm {norm} is not 1")]
    NotUnitVector { norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("resolvent is singular: spectral margin {margin:e}")]
    Singular { margin: f64 },

    #[error(
        "m_sc on the real cut [-2, 2] needs an explicit boundary value request (z = {re} + {im}i)"
    )]
    BoundaryValue { re: f64, im: f64 },

    #[error("matching-moment hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("empty sample")]
    EmptySample,

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
