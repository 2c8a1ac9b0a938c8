use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} needs primes beyond the table capacity (largest prime {largest})")]
    CapacityExceeded { value: u64, largest: u64 },
    #[error("integer overflow while computing {0}")]
    Overflow(String),
    #[error("size {size} exceeds configured cap {cap}")]
    SizeExceeded { size: u128, cap: u128 },
    #[error("polynomial is not homogeneous of a single degree")]
    NotHomogeneous,
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
