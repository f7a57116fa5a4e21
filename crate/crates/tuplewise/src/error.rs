use thiserror::Error;

/// Errors produced by dataset construction, partitioning, estimation and the
/// experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{workers} workers cannot evenly split {what} of size {size}")]
    Divisibility {
        what: &'static str,
        size: u64,
        workers: u64,
    },

    #[error("empty {which} sample")]
    EmptySample { which: &'static str },

    #[error("line {line}: {reason}")]
    CsvParse { line: usize, reason: String },

    #[error(
        "complete enumeration needs {required} kernel evaluations, over the {budget} budget; \
         use incomplete_generalized instead"
    )]
    TupleBudgetExceeded { required: u128, budget: u64 },

    #[error(
        "pair budgets differ: incomplete evaluates {incomplete} pairs but complete evaluates \
         {complete}"
    )]
    BudgetConstraint { incomplete: u64, complete: u64 },

    #[error("partition assignments do not match: {reason}")]
    PartitionMismatch { reason: String },

    #[error("training diverged at iteration {iteration}: monitor loss {loss}")]
    Diverged { iteration: u64, loss: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
