use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed model file (line {line}): {message}")]
    Parse { line: usize, message: String },

    #[error("scope index out of range: variable {index} in a model with {variables} variables")]
    ScopeOutOfRange { index: usize, variables: usize },

    #[error("factor {factor}: table has {found} entries, expected {expected}")]
    TableLength {
        factor: usize,
        expected: usize,
        found: usize,
    },

    #[error("factor {factor}: negative probability entry {value}")]
    NegativeEntry { factor: usize, value: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("configuration space of size {size} exceeds the enumeration cap {cap}")]
    EnumerationCap { size: u128, cap: usize },

    #[error("every configuration has potential -inf")]
    ZeroPartition,

    #[error("probability table is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("support violation at index {index}: q > 0 where p = 0")]
    SupportViolation { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sample mean {mean} is outside the range of the target transform")]
    InverseDomain { mean: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
