use thiserror::Error;

/// Errors raised by the simulator and verifier.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("matrix is not unitary (max |UU† - I| = {0:e})")]
    NotUnitary(f64),
    #[error("branch probabilities must lie in [0,1] and sum to 1 (got sum {0})")]
    ProbabilitySum(f64),
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("expected {expected} genes, got {got}")]
    GeneCount { expected: usize, got: usize },
    #[error("move {index} does not match the schema (expected {expected})")]
    MoveKindMismatch { index: usize, expected: &'static str },
    #[error("chromosomes do not share a schema")]
    SchemaMismatch,
    #[error("profile does not belong to any analyzed family")]
    UnknownFamily,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
