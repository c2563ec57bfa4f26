use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("delta = {delta} is not a positive integer multiple of the grid step {step}")]
    NotGridMultiple { delta: f64, step: f64 },

    #[error("base path covers {available} steps but {required} are needed")]
    PathTooShort { available: usize, required: usize },

    #[error("invalid path: {0}")]
    Path(String),

    #[error("Cholesky factorization failed for a grid of {size} steps (non-positive pivot at row {row})")]
    Cholesky { size: usize, row: usize },

    #[error("adaptive quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("solution is not finite at step {step}")]
    BlowUp { step: usize },

    #[error("empty collection of {0}")]
    Empty(&'static str),

    #[error("regression: {0}")]
    Regression(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: impl Into<f64>, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value: value.into(),
            domain,
        }
    }

    /// Failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Cholesky { .. }
                | Error::Quadrature { .. }
                | Error::BlowUp { .. }
                | Error::Regression(_)
        )
    }
}
