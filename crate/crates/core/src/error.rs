use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("memory budget exceeded: {what} needs {requested} bytes, budget is {budget} bytes")]
    Resource {
        what: &'static str,
        requested: u128,
        budget: u128,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("degenerate state at t={t}: all valuations are exactly zero")]
    DegenerateState { t: usize },

    #[error("alpha={alpha} outside the {phase} window ({lower}, {upper}]")]
    OutsidePhase {
        phase: &'static str,
        alpha: f64,
        lower: f64,
        upper: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("numerical instability at t={t}: {detail}")]
    Instability { t: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
