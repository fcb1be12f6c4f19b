use thiserror::Error;

/// Errors raised by every operation in this crate.
///
/// Variants fall into three families (see [`Error::kind`]): input
/// validation, budget/feasibility gates, and internal invariant
/// violations that indicate a bug.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("polynomial is not monic (leading coefficient {0})")]
    NotMonic(u64),
    #[error("polynomial is reducible over GF({p}) (divisible by {factor:?})")]
    NotIrreducible { p: u64, factor: Vec<u64> },
    #[error("invalid field element or polynomial: {0}")]
    InvalidField(String),
    #[error("alpha {alpha} outside extension interval [{lo}, {hi}]")]
    AlphaOutOfRange { alpha: String, lo: String, hi: String },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("budget exceeded: {what} requires 2^{required_log2} but budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required_log2: u32,
        budget: u64,
    },
    #[error("budget exceeded: {what} requires {required} but budget is {budget}")]
    GridTooLarge {
        what: &'static str,
        required: u128,
        budget: u64,
    },
    #[error("determinacy methods disagree on {0}")]
    MethodDisagreement(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Budget,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::BudgetExceeded { .. } | Error::GridTooLarge { .. } => ErrorKind::Budget,
            Error::MethodDisagreement(_) | Error::Invariant(_) => ErrorKind::Internal,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
