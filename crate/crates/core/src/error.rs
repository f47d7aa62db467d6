use thiserror::Error;

/// Errors raised across simulation, fitting and learning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("Pauli exclusion violated: two {spin} fermions placed on site {site}")]
    PauliExclusion { site: usize, spin: &'static str },

    #[error("unsupported bipartition: {0}")]
    Bipartition(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular design matrix: {0}")]
    Singular(String),

    #[error("zero variance in observed values")]
    ZeroVariance,

    #[error("cannot stratify: group U={u} has {rows} rows, need at least {folds}")]
    Stratification { u: f64, rows: usize, folds: usize },

    #[error("dataset format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
