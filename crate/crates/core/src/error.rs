use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("probability {value} outside [{lo}, {hi}]")]
    ProbabilityOutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("index {index} out of range for block length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("duplicate index {0}")]
    DuplicateIndex(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("infeasible target {target} (feasible range [{lo}, {hi}])")]
    Infeasible { target: f64, lo: f64, hi: f64 },
    #[error("bisection failed to bracket the root: {0}")]
    NoBracket(&'static str),
    #[error("robust mode requires {0}")]
    MissingRobustInput(&'static str),
}
