use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("all sample weights are zero")]
    DegenerateWeights,

    #[error("sample {sample} has zero probability under every component")]
    DegenerateSample { sample: usize },

    #[error("state space of {states} configurations exceeds the enumeration limit of {limit}")]
    Capacity { states: f64, limit: usize },

    #[error("non-finite flip ratio at sample {sample}, site {site}, component {component}")]
    NumericOverflow {
        sample: usize,
        site: usize,
        component: usize,
    },

    #[error("objective is not finite at the starting point")]
    InvalidStart,

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
