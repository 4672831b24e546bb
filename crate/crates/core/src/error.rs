use thiserror::Error;

/// Errors raised by the attrforge library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("oracle size exceeded: {size} points, limit {limit}")]
    OracleSizeExceeded { size: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("trajectory blow-up at point {index}")]
    BlowUp { index: usize },

    #[error("no absorbing ball found")]
    NoAbsorbingBall,

    #[error("not quasi-stable on supplied data: eta = {eta} at pair ({i}, {j})")]
    NotQuasiStable { eta: f64, i: usize, j: usize },

    #[error("contraction branch fails on supplied data: eta = {eta} at pair ({i}, {j})")]
    NoContraction { eta: f64, i: usize, j: usize },

    #[error("no certificate in grid")]
    NoCertificateInGrid,

    #[error("certificate mismatch: {0}")]
    CertificateMismatch(String),

    #[error("cover propagation inequality violated at pair ({i}, {j}): {lhs} > {rhs}")]
    InequalityViolated {
        i: usize,
        j: usize,
        lhs: f64,
        rhs: f64,
    },

    #[error("time step not divisible")]
    TimeStepNotDivisible,

    #[error("ε too large: eta + eps * kappa = {0} >= 1")]
    EpsilonTooLarge(f64),

    #[error("no compact+small split below λ at sample {index}")]
    NoSplit { index: usize },

    #[error("empty admissible interval for σ")]
    EmptyAdmissibleInterval,

    #[error("unknown system: {0}")]
    UnknownSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
