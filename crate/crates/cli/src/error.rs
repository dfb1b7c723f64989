use std::fmt;

use ssl_rate_lab::error::LabError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config; exit code 2.
    Validation(String),
    /// Exact enumeration would exceed the node cap; exit code 3.
    Budget(String),
    /// At least one verification criterion failed; exit code 1.
    Failed(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Failed(_) | CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Budget(m) => write!(f, "{m}"),
            CliError::Failed(m) => write!(f, "{m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::EnumerationBudget { needed, cap } => CliError::Budget(format!(
                "exact enumeration needs {needed} nodes but the cap is {cap}; \
                 lower the ell grid, raise node_cap, or estimate with Monte Carlo instead"
            )),
            LabError::Parse(_) | LabError::UnknownLearner(_) | LabError::Domain(_) | LabError::Degenerate(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Other(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.into())
    }
}
