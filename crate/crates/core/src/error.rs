use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is outside its admissible range.
    #[error("config error: {0}")]
    Config(String),

    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The discrete operator lost its M-matrix sign structure.
    #[error("assembly regime error: {0}")]
    Regime(String),

    /// An iteration did not converge within its budget.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// A linear solve or other numerical kernel failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Post-processing could not be carried out on the supplied data.
    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
