use thiserror::Error;

pub type Result<T> = std::result::Result<T, KmrcdError>;

#[derive(Debug, Error)]
pub enum KmrcdError {
    #[error("no kernel function available for a precomputed kernel")]
    NoKernelFunction,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid kernel parameter: {0}")]
    InvalidKernel(String),

    #[error("non-finite kernel value for pair ({i}, {j})")]
    NonFiniteKernel { i: usize, j: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue} with largest eigenvalue {largest}")]
    NotPositiveSemidefinite { eigenvalue: f64, largest: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("degenerate data for bandwidth: all pairwise distances are zero")]
    DegenerateBandwidth,

    #[error("subset size h = {h} is out of range for n = {n} ({reason})")]
    SubsetSize { h: usize, n: usize, reason: String },

    #[error("need at least {needed} values, got {found}")]
    TooFewValues { needed: usize, found: usize },

    #[error("column {column} has zero robust scale")]
    ZeroScale { column: usize },

    #[error("degenerate data for SDO: every projection direction had zero spread")]
    DegenerateSdo,

    #[error("all variance in weighted center: no eigenvalue above the rank cutoff")]
    AllVarianceInCenter,

    #[error("correlation matrix construction did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("rejection sampling exceeded {0} draws")]
    RejectionLimit(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
