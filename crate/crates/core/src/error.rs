use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("neuron label {0} is not part of the network")]
    UnknownNeuron(i64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state space too large: {size} neurons (limit {limit}); {hint}")]
    StateSpaceTooLarge {
        size: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("censored samples present ({censored} of {total}); pass an explicit drop policy")]
    CensoredInput { censored: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of numerical routines, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular(_) | Error::NoConvergence(_))
    }
}
