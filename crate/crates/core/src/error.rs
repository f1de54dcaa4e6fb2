use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dilation by zero collapses the support")]
    ZeroDilation,

    #[error("all coefficients are zero")]
    AllCoefficientsZero,

    #[error("cyclic modulus mismatch: 2^{expected} vs 2^{found}")]
    ModulusMismatch { expected: u32, found: u32 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("resolution {requested} exceeds the representation resolution {available}")]
    ResolutionExceeded { requested: u32, available: u32 },

    #[error("not a dyadic rational: {0}")]
    NotDyadic(String),

    #[error("coefficients are not relatively prime (gcd {gcd})")]
    NotCoprime { gcd: i64 },

    #[error("conditioning event has zero probability")]
    ZeroProbability,

    #[error("wrong box: {0}")]
    WrongBox(String),

    #[error("KL divergence undefined: q has zero mass at {0} where p is positive")]
    NotAbsolutelyContinuous(String),

    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("no distribution assigned to variable {0}")]
    MissingVariable(String),

    #[error("iid class {0} has more than one assigned member")]
    IidConflict(String),

    #[error("denominator below 1e-6 on every candidate")]
    DegenerateDenominator,

    #[error("embedding base {base} is not injective on row {row}")]
    EmbeddingCollision { base: i64, row: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
