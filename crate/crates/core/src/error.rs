//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the model, ensemble, fitting, and filter layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A shell index outside `1..=n_shells`.
    #[error("shell index {index} out of range 1..={n_shells}")]
    ShellIndex { index: usize, n_shells: usize },

    /// An input value outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A vector or matrix with the wrong dimensions.
    #[error("shape error in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A non-finite value appeared during integration.
    #[error("non-finite value during integration at t={t}, state index {index}")]
    NonFinite { t: f64, index: usize },

    /// A covariance factorization failed; `minor` is the first leading
    /// minor that is not positive semidefinite.
    #[error("covariance not positive semidefinite at leading minor {minor}")]
    Covariance { minor: usize },

    /// Invalid filter or model configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Not enough data points for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An operation received an empty data set.
    #[error("empty data: {0}")]
    EmptyData(String),

    /// Sample statistics degenerate for the requested fit.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Kalman update could not be completed.
    #[error("filter update failed: {0}")]
    Update(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Config file parsing or key errors; carries the offending key
    /// where one is known.
    #[error("config file error: {0}")]
    ConfigFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
