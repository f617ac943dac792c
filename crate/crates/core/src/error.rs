use thiserror::Error;

use crate::grid::Field;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: deformation gradient not orientation preserving (det = {det:e})")]
    Domain { what: &'static str, det: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("Newton iteration did not converge after {iters} iterations (gradient norm {grad_norm:e}, target {target:e})")]
    NonConvergence {
        iters: usize,
        grad_norm: f64,
        target: f64,
        best: Box<Field>,
    },

    #[error("line search found no admissible point (gradient norm {grad_norm:e})")]
    DegenerateStep { grad_norm: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear system is not positive definite: {0}")]
    Singular(String),

    #[error("trajectories are not aligned: {0}")]
    Misaligned(String),

    #[error("rate fit needs at least {min} positive values: {detail}")]
    BadRateData { min: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed record: {0}")]
    Format(String),
}

impl Error {
    /// Wraps an error with the index of the time step in which it occurred.
    pub fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// Strips step annotations and returns the underlying cause.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
