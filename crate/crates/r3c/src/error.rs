use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by raster I/O, classifiers, and the recursion engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("unsupported bit depth in {path}: expected 8-bit, got {detail}")]
    UnsupportedDepth { path: PathBuf, detail: String },

    #[error("unsupported color format in {path}: expected single-channel grayscale, got {detail}")]
    UnsupportedColor { path: PathBuf, detail: String },

    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: {expected} vs {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("image too small: {width}x{height} (need at least {min_width}x{min_height})")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },

    #[error("empty image: width and height must both be at least 1")]
    EmptyImage,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
