use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("i/o error on {path}: {source}")]
    IoPath {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed radiance header: {0}")]
    MalformedHeader(String),

    #[error("unsupported image orientation `{0}`; only `-Y h +X w` is accepted")]
    UnsupportedOrientation(String),

    #[error("truncated scanline data at row {row}")]
    TruncatedScanline { row: usize },

    #[error("invalid radiance map: {0}")]
    InvalidMap(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh contains no usable triangles")]
    EmptyMesh,

    #[error("roughness {0} is below the sampling minimum")]
    RoughnessBelowMinimum(f64),

    #[error("degenerate ratio estimator: denominator {0:e} too small")]
    DegenerateEstimator(f64),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at step {step}: loss {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bad binary file: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("image encoding error: {0}")]
    Image(String),
}

impl Error {
    /// True for failures of the underlying file system rather than of the
    /// data or arguments.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::IoPath { .. })
    }

    pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::IoPath { path, source }
    }
}
