use std::path::PathBuf;

use thiserror::Error;

use crate::imageio::ColorSpace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("truncated image data: {0}")]
    Truncated(String),

    #[error("png decode failed: {0}")]
    Png(String),

    #[error("expected a {expected:?} image, got {actual:?}")]
    WrongColorSpace {
        expected: ColorSpace,
        actual: ColorSpace,
    },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Entropy(#[from] crate::entropy::EntropyError),

    #[error(transparent)]
    Bitstream(#[from] crate::codec::BitstreamError),

    #[error("rd curve error: {0}")]
    Curve(String),

    #[error("empty overlap between curves: {0}")]
    EmptyOverlap(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
