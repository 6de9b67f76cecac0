use thiserror::Error;

/// Errors raised by the tensor kernels, the MPS machinery and the simulation driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("contraction error: index pair ({left}, {right}) has mismatched dimensions {left_dim} != {right_dim}")]
    Contraction {
        left: usize,
        right: usize,
        left_dim: usize,
        right_dim: usize,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("krylov exponential did not converge after {iterations} iterations (residual estimate {residual:e})")]
    KrylovNotConverged { iterations: usize, residual: f64 },

    #[error("at site {site}: {source}")]
    AtSite {
        site: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("dense oracle limited to {limit} states, got {dim}")]
    DimensionCap { dim: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_site(self, site: usize) -> Self {
        Error::AtSite {
            site,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
