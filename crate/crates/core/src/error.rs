use thiserror::Error;

/// Errors raised by distribution construction, learners and the evaluation engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("operation requires a two-point domain, got domain size {0}")]
    DomainSize(usize),

    #[error("sample size: {0}")]
    SampleSize(String),

    #[error("enumeration needs {needed} terms but the node cap is {cap}; lower ell or switch to Monte Carlo")]
    EnumerationBudget { needed: u128, cap: u64 },

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("degenerate construction: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown learner '{0}'")]
    UnknownLearner(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
