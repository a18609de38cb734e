//! Error type shared by all core modules.

/// Errors raised by the core library.
///
/// Contract violations (dimension mismatches, non-finite inputs, dominated
/// points where mutual non-domination is required) are reported as errors
/// rather than panics so that callers driving long training runs can attach
/// diagnostics and shut down cleanly.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("unsupported objective count {n}: exact hypervolume routines cover n in {{2, 3}}")]
    UnsupportedDimension { n: usize },

    #[error("input set is not mutually non-dominated: row {row} is dominated")]
    DominatedInput { row: usize },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("empty input: {context}")]
    EmptyInput { context: &'static str },

    #[error("stale tape: parameters changed since the forward pass that produced it")]
    StaleTape,

    #[error(
        "training aborted at iteration {iteration}: non-finite loss \
         (network {network}, sample {sample}, losses {losses:?})"
    )]
    TrainingAborted {
        iteration: usize,
        network: usize,
        sample: usize,
        losses: Vec<f64>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
