//! Error taxonomy shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text; `line` and `col` are 1-based.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    /// Input violates a domain precondition (negative weight, NaN, ...).
    #[error("{0}")]
    Domain(String),

    /// The caller asked for something nonsensical (k = 0, empty dataset, ...).
    #[error("{0}")]
    Usage(String),

    /// A binary file or record does not match its declared format.
    #[error("{0}")]
    Format(String),

    /// The O(1) lookup table would exceed the configured cell budget.
    #[error(
        "layout needs {cells} table cells, over the {budget}-cell budget; \
         use a smaller alpha or low-memory mode"
    )]
    Resource { cells: u64, budget: u64 },

    /// Rejection sampling hit the iteration cap without a green draw.
    #[error(
        "no green draw within {max_iters} iterations (effective sparsity {sparsity:.3e}); \
         the vector is too sparse for the current scaling"
    )]
    IterationCap { sparsity: f64, max_iters: u64 },

    /// A vector does not fit the layout it is being hashed against.
    /// `line` is the 1-based source line when known, 0 otherwise.
    #[error("line {line}, coordinate {coord}: {msg}")]
    LayoutMismatch { line: u64, coord: u32, msg: String },

    /// Two sketches cannot be compared; `field` names the differing metadata.
    #[error("incompatible sketches: {field} differs")]
    Incompatible { field: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors a CLI should report as usage/I-O (exit code 2)
    /// rather than data/domain failures (exit code 1).
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_) | Error::Io(_))
    }
}
