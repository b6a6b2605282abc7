use thiserror::Error;

/// Errors raised by the algebraic and numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("index tuple {tuple:?} has length {found}, tensor order is {order}")]
    WrongOrder { tuple: Vec<usize>, order: usize, found: usize },

    #[error("entries {first:?} and {second:?} belong to the same permutation class")]
    DuplicateClass { first: Vec<usize>, second: Vec<usize> },

    #[error("{what} out of range: {value} (allowed {allowed})")]
    OutOfRange { what: &'static str, value: i64, allowed: String },

    #[error("exponent {0} exceeds the supported Gaussian moment range (max 60)")]
    MomentOverflow(u32),

    #[error("joint cumulant needs at least one argument")]
    EmptyCumulant,

    #[error("structural invariant violated: {0}")]
    Structure(String),

    #[error("series inversion requires a unit constant term")]
    NonInvertible,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("oracle precondition failed: {0}")]
    Oracle(String),

    #[error("sweep rejected: {0}")]
    Sweep(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
