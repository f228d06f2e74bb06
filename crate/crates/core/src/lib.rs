//! Reliability-weighted aggregation of LLM-judge scores.
//!
//! The pipeline: a set of models each answer every query, every model then
//! judges every response on a fixed score scale, and a latent-truth model
//! (categorical prior + per-judge confusion matrices, fit by EM) turns the
//! noisy score tensor into one final score per response. The top-scored
//! response per query is the ensemble output.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod levels;
pub mod scoring;
pub mod selection;
pub mod simulation;
pub mod tensor;

pub use dataset::{Dataset, Query, Response, ResponseSet};
pub use error::{Error, Result};
pub use levels::{fractional_split, FractionalSplit, ScoreLevels};
pub use tensor::{ModelParams, Posterior, ScoreTensor, SelectionResult};
