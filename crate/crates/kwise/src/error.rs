//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A modulus that is not prime.
    NotPrime(u32),
    /// Row/column or arity mismatch between operands.
    Shape(String),
    /// An enumeration would exceed its term guard.
    GuardExceeded { needed: u128, limit: u128 },
    /// A value left its contractual range (probabilities, query values, ...).
    Range(String),
    /// Invalid parameter to a constructor or algorithm.
    Invalid(String),
    /// Malformed textual fixture or config.
    Parse(String),
    /// An oracle answer sequence inconsistent with its tolerance contract.
    OracleViolation(String),
    /// A sampling or query budget ran out.
    BudgetExhausted(String),
    /// Recovered bits do not decode to a valid subspace basis.
    InvalidDecode(String),
    /// Iterative estimation failed to settle within its round cap.
    NonConvergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPrime(p) => write!(f, "{p} is not prime"),
            Error::Shape(m) => write!(f, "shape mismatch: {m}"),
            Error::GuardExceeded { needed, limit } => {
                write!(f, "enumeration guard exceeded: needs {needed} > limit {limit}")
            }
            Error::Range(m) => write!(f, "range violation: {m}"),
            Error::Invalid(m) => write!(f, "invalid parameter: {m}"),
            Error::Parse(m) => write!(f, "parse error: {m}"),
            Error::OracleViolation(m) => write!(f, "oracle contract violation: {m}"),
            Error::BudgetExhausted(m) => write!(f, "budget exhausted: {m}"),
            Error::InvalidDecode(m) => write!(f, "invalid decode: {m}"),
            Error::NonConvergence(m) => write!(f, "non-convergence: {m}"),
        }
    }
}

impl std::error::Error for Error {}
