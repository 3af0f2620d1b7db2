use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invalid network: {0}")]
    Validation(String),

    #[error("node `{node}` in layer {layer} has no outgoing edges")]
    SinkNode { layer: usize, node: String },

    #[error("stationary distribution did not converge after {iterations} iterations: {reason}")]
    NonConvergence { iterations: usize, reason: String },

    #[error("node `{node}` is not part of layer {layer}")]
    NodeNotInLayer { layer: usize, node: String },

    #[error("infeasible allocation: {0}")]
    InfeasibleAllocation(String),

    #[error("layers share nodes; this operation needs a non-overlapping network")]
    Overlap,

    #[error("layer {layer}: {requested} steps exceed the cap of {cap}")]
    CapExceeded {
        layer: usize,
        requested: usize,
        cap: usize,
    },

    #[error("enumeration of {count} candidates exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("confidence scale must lie in (0, 1], got {0}")]
    InvalidGamma(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
