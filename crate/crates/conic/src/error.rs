use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{owner} references unknown variable index {index}")]
    UnknownVariable { owner: String, index: usize },
    #[error("binary variable {0} has bounds outside [0, 1]")]
    BinaryBounds(String),
    #[error("cone block {0} has no tail entries")]
    EmptyCone(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("numerical failure after {iterations} iterations: {reason}")]
    Numerical {
        iterations: usize,
        reason: String,
        /// One line per iteration: `iter pres dres gap mu step`.
        trace: Vec<String>,
    },
    #[error("root relaxation failed: {0}")]
    RootRelaxation(Box<SolveError>),
}
