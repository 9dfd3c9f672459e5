use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates the operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The requested work exceeds a cost guard; shrink N, M or m.
    #[error("cost guard exceeded: {0}")]
    CostGuard(String),
    /// The certified phase error would exceed the allowed bound.
    #[error("precision loss: certified error {bound:e} exceeds {limit:e}")]
    PrecisionLoss { bound: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
