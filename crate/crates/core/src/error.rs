use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mask length {got} does not match parameter count {expected}")]
    MaskLength { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("baseline train loss is not finite ({0})")]
    NonFiniteBaseline(f64),

    #[error("statistically undefined: {0}")]
    Undefined(String),

    #[error("unsupported measure: {0}")]
    Unsupported(String),

    #[error("parse error at byte offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("{failed} of {total} models failed to train, above the {cap} failure cap")]
    FailureCap { failed: usize, total: usize, cap: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
