use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("data matrix is empty")]
    EmptyData,

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} is degenerate (zero sample standard deviation)")]
    DegenerateCoordinate { index: usize },

    #[error("bandwidth must be strictly positive (coordinate {index})")]
    NonPositiveBandwidth { index: usize },

    #[error("pilot density is zero at observation {index}; cannot form geometric mean")]
    ZeroPilotDensity { index: usize },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("graph has no stored pair amplitudes; rebuild with the pairs backend")]
    MissingAmplitudes,

    #[error("degenerate point configuration: {0}")]
    DegenerateGeometry(String),

    #[error("dissimilarity undefined for rows {i} and {j}: no usable variable")]
    UndefinedDissimilarity { i: usize, j: usize },

    #[error("{0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
