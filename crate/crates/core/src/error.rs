use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("step-size budget exceeded at s = {at}: local error estimate {estimate:e} > {budget:e}")]
    StepSize { at: f64, estimate: f64, budget: f64 },

    #[error("improper-integral tail {tail:e} exceeds {ratio:e} of head {head:e}")]
    TailDominance { head: f64, tail: f64, ratio: f64 },

    #[error("positivity violated: {what} = {value:e} at s = {at}")]
    Positivity { what: &'static str, at: f64, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}
