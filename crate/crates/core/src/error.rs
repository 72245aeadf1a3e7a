use std::path::PathBuf;

use thiserror::Error;

use crate::types::SpeakerType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate embedding: zero vector cannot be length-normalized")]
    DegenerateEmbedding,
    #[error("non-finite value in embedding")]
    NonFiniteEmbedding,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid training data: {0}")]
    InvalidTrainingData(String),
    #[error("rank-deficient data: within-class scatter is singular after regularization")]
    RankDeficient,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("segment outside posterior extent")]
    SegmentOutsidePosteriors,
    #[error("invalid posteriors: {0}")]
    InvalidPosteriors(String),
    #[error("invalid segmentation parameters: {0}")]
    InvalidSegmentation(String),
    #[error("missing embedding for segment {0}")]
    MissingEmbedding(usize),
    #[error("non-finite score for pair ({0}, {1})")]
    NonFiniteScore(usize, usize),
    #[error("requested {k} clusters but only {n} segments")]
    TooManyClusters { k: usize, n: usize },
    #[error("oracle speaker-type split requires speaker-type labels")]
    MissingTypeLabels,
    #[error("empty scoring region")]
    EmptyScoringRegion,
    #[error("insufficient speakers of type {ty}: requested {requested}, available {available}")]
    InsufficientSpeakers {
        ty: SpeakerType,
        requested: usize,
        available: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("bad magic in {0}")]
    BadMagic(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    IoStream(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
