use thiserror::Error;

use crate::ode::OdeError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer did not converge after {iterations} iterations (best value {best_value})")]
    NonConvergence {
        iterations: usize,
        best_value: f64,
        best_point: Vec<f64>,
    },

    #[error(transparent)]
    Ode(#[from] OdeError),

    #[error("spline fit is rank deficient for parameter `{0}`")]
    RankDeficient(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
