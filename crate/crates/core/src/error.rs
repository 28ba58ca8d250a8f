use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("component {component} vanished (responsibility mass {mass:e})")]
    DegenerateComponent { component: usize, mass: f64 },

    #[error("bracket exhausted while maximizing over beta for component {component}")]
    BracketExhausted { component: usize },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error(
        "information matrix is not invertible (smallest eigenvalue {min_eigenvalue:e}, condition number {condition:e})"
    )]
    SingularInformation { min_eigenvalue: f64, condition: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("{failed} of {total} bootstrap/simulation replicates failed")]
    TooManyFailures { failed: usize, total: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }
}
