use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid structure: {0}")]
    Semantic(String),
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("free variable x{var} out of scope at arity {arity}")]
    Scope { var: usize, arity: usize },
    #[error("guard exceeded: {what} ({value} > {limit})")]
    Guard {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("arity overflow: {needed} exceeds bound {n_max}")]
    ArityOverflow { needed: usize, n_max: usize },
    #[error("flatness violation: {0}")]
    NotFlat(String),
    #[error("corrupt flat structure: {0}")]
    Corrupt(String),
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("not a subgroup member: {0}")]
    NotMember(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::Guard { .. })
    }
}
