use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KofnError {
    #[error("probability of test {test} must lie strictly inside (0,1), got {value}")]
    Probability { test: usize, value: String },
    #[error("rate limit of test {test} must be positive, got {value}")]
    Rate { test: usize, value: String },
    #[error("cost of test {test} must be positive, got {value}")]
    Cost { test: usize, value: String },
    #[error("threshold k={k} must satisfy 1 <= k <= n={n}")]
    Threshold { k: usize, n: usize },
    #[error("instance needs at least one test")]
    Empty,
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("routing references processor {0}, which is not in the instance")]
    UnknownProcessor(usize),
    #[error("malformed routing: {0}")]
    Structure(String),
    #[error("expansion needs {required} permutations, above the cap of {cap}")]
    CapExceeded { required: u128, cap: u128 },
    #[error("n={n} exceeds the limit of {limit} for the exponential dynamic program")]
    TooLarge { n: usize, limit: usize },
}

pub type Result<T, E = KofnError> = std::result::Result<T, E>;
