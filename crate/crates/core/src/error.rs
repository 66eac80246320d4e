use thiserror::Error;

use crate::fppe::Residuals;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {value} is above the range of the money cost function (supremum {sup})")]
    Range { value: f64, sup: f64 },

    #[error("solver did not converge after {iterations} iterations (worst residual {worst:e})")]
    Convergence {
        iterations: usize,
        worst: f64,
        residuals: Box<Residuals>,
    },

    #[error("optimizer did not certify its value: best {best}, gap estimate {gap:e}")]
    Certification { best: f64, gap: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("problem too large: {0}")]
    Size(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
