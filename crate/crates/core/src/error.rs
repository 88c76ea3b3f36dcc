use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the surfacing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("optimizer error: non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("degenerate gradient: |grad f| = {norm:e} is below the floor")]
    DegenerateGradient { norm: f64 },

    #[error("degenerate batch: every sample fell below the gradient floor")]
    DegenerateBatch,

    #[error("empty level set: the field has no zero crossing on the grid")]
    EmptyLevelSet,

    #[error("topology error: {reason} ({} offending edges, e.g. {:?})", edges.len(), edges.first())]
    Topology {
        reason: &'static str,
        edges: Vec<(usize, usize)>,
    },

    #[error("parse error in {path:?} at {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("input error: {0}")]
    Input(String),

    #[error("degenerate extent: all points coincide")]
    DegenerateExtent,

    #[error("initialization error: {0}")]
    Initialization(String),

    #[error("numerical abort at iteration {iteration}: non-finite loss")]
    NumericalAbort {
        iteration: usize,
        /// Parameters from the last iteration with a finite loss.
        last_good: Box<crate::field::MlpParams>,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Exit code class used by the command-line tool: 2 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalAbort { .. }
            | Error::NonFiniteGradient { .. }
            | Error::DegenerateBatch
            | Error::EmptyLevelSet
            | Error::Initialization(_) => 2,
            _ => 1,
        }
    }
}
