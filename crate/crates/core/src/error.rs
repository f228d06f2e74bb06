use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid caller-supplied data (empty query text, mismatched dims, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Bad configuration (strategy minimums, missing credentials, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Prompt template arity or placeholder problems.
    #[error("template error: {0}")]
    Template(String),

    /// Judge output did not contain the required score mapping.
    /// Carries the offending text for logging and retry decisions.
    #[error("parse error: {msg}; judge output: {text:?}")]
    Parse { msg: String, text: String },

    /// A score fell outside the configured level range.
    #[error("score {value} out of range [{min}, {max}]{location}")]
    Range {
        value: f64,
        min: f64,
        max: f64,
        /// " at (i, j, j')" when the tensor position is known, else empty.
        location: String,
    },

    /// A judge call failed after exhausting its retry budget.
    #[error("judge call failed: {0}")]
    CallFailed(String),

    /// Inference-stage failures (all-missing rows, degenerate M-step rows, NaN scores).
    #[error("inference error: {0}")]
    Inference(String),

    /// Label/record problems during evaluation.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
