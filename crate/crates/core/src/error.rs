use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied parameter is out of range or inconsistent.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    /// The equilibrium requires rho(beta G) < 1.
    #[error("spectral radius rho(beta G) = {rho} violates the rho < 1 assumption")]
    SpectralRadius { rho: f64 },

    #[error("graph has no edges; {0}")]
    EmptyGraph(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("metric is undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }
}
