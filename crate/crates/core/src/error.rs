use thiserror::Error;

use crate::parser::SourceSpan;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BicError {
    #[error("dimension mismatch: expected n = {expected}, found n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("variable count {0} out of range (1..=16)")]
    VariableCount(usize),

    #[error("{message} at line {}, column {}", span.line, span.column)]
    Syntax { message: String, span: SourceSpan },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("negative weight {0} for a modular vector")]
    NegativeWeight(String),

    #[error("singular basis: subspace {index} has rank {rank} < {columns} basis vectors")]
    SingularBasis {
        index: usize,
        rank: usize,
        columns: usize,
    },

    #[error("antecedent {0} is not verified tight")]
    NotTight(usize),

    #[error("slack not established for the antecedent set")]
    SlackNotEstablished,

    #[error("access structure is not upward-closed: {0}")]
    NotUpwardClosed(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, BicError>;

impl From<std::io::Error> for BicError {
    fn from(e: std::io::Error) -> Self {
        BicError::Io(e.to_string())
    }
}
