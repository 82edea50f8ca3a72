use std::fmt;

use thiserror::Error;

/// One violated configuration rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    InvalidParameter { field: &'static str, reason: String },
    IncompatibleMethod { reason: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::InvalidParameter { field, reason } => {
                write!(f, "invalid parameter `{field}`: {reason}")
            }
            ValidationIssue::IncompatibleMethod { reason } => {
                write!(f, "incompatible method: {reason}")
            }
        }
    }
}

/// Every rule a configuration bundle violates, in check order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<ValidationIssue>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Validation(#[from] ValidationErrors),
    #[error("potential subtraction requires a background potential")]
    SubtractionWithoutBackground,
    #[error("no closed-form compensation factor for potential {potential} in background {background}")]
    UnsupportedPair { potential: String, background: String },
    #[error("distribution family {family} is not available: {reason}")]
    UnsupportedFamily { family: String, reason: String },
    #[error("distribution family {family} is singular at these parameters: {reason}")]
    SingularTransform { family: String, reason: String },
    #[error("only lambda = 1 is supported for the Poschl-Teller ground state (got {lambda})")]
    UnsupportedLambda { lambda: u32 },
    #[error("root search failed: {0}")]
    RootNotBracketed(String),
    #[error("distribution degenerates to a delta function: {0}")]
    DegenerateDistribution(String),
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("need at least 3 usable rows inside the fit window, found {found}")]
    InsufficientRows { found: usize },
    #[error("precision matrix is singular")]
    SingularPrecision,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
