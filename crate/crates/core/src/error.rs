use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the descriptor pipeline and evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("image {0} has zero width or height")]
    EmptyImage(PathBuf),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),
    #[error("plane of {width}x{height} is too small for radius {radius} (needs at least {needed} pixels per side)")]
    PlaneTooSmall {
        width: usize,
        height: usize,
        radius: u32,
        needed: usize,
    },
    #[error("degenerate graph: {0} node(s), degree centrality needs at least 2")]
    DegenerateGraph(usize),
    #[error("eigenvector centrality did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid neighborhood: {0}")]
    InvalidNeighborhood(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
