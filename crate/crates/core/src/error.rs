use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("edge list is empty")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("epidemic threshold is singular: <k^2> = {mean_sq} <= <k> = {mean}")]
    SingularThreshold { mean: f64, mean_sq: f64 },

    #[error("pagerank did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("checkpoint: bad magic")]
    BadMagic,

    #[error("checkpoint: feature schema mismatch (expected {expected:?}, found {found:?})")]
    FeatureSchemaMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("checkpoint: shape mismatch for `{name}`: expected {expected:?}, found {found:?}")]
    CheckpointShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("checkpoint: truncated file ({0})")]
    Truncated(String),

    #[error("graph hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error("sequence of {len} nodes exceeds the attention cap of {cap}")]
    SequenceTooLong { len: usize, cap: usize },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },

    #[error("fixture `{name}`: {msg}")]
    Fixture { name: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            msg: msg.into(),
        }
    }
}
