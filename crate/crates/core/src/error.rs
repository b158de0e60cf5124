use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NifError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NifError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("layer {layer}: shape mismatch, expected {expected}, found {actual}")]
    ShapeMismatch {
        layer: usize,
        expected: String,
        actual: String,
    },

    #[error("layer {layer}: unknown activation `{name}`")]
    UnknownActivation { layer: usize, name: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("need at least {required} samples, got {actual}")]
    InsufficientSamples { required: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("edge layer {layer} ({src} -> {dst}): {source}")]
    Edge {
        layer: usize,
        src: usize,
        dst: usize,
        #[source]
        source: Box<NifError>,
    },

    #[error("graph is not layered: {0}")]
    NotLayered(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl NifError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NifError::Io {
            path: path.into(),
            source,
        }
    }
}
