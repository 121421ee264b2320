use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("quadrature for {what} of bump {bump} did not converge within {limit} subdivisions")]
    Quadrature {
        what: String,
        bump: usize,
        limit: usize,
    },

    #[error("INCOMPLETE_METRIC: requested geodesic radius {requested} exceeds total length {total_length}")]
    IncompleteMetric { total_length: f64, requested: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("grid budget exceeded: {nodes} nodes requested, budget is {budget}")]
    GridBudget { nodes: usize, budget: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
