use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported image format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("corrupt header in {path}: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },

    #[error("dataset is empty: {0}")]
    EmptyDataset(PathBuf),

    #[error("malformed dataset filename: {0}")]
    MalformedFilename(PathBuf),

    #[error("input matrix is empty")]
    EmptyInput,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image {width}x{height} is too small (need at least {min}x{min})")]
    ImageTooSmall { width: usize, height: usize, min: usize },

    #[error("invalid quantization range [{lo}, {hi}] or level count {levels}")]
    BadRange { lo: f64, hi: f64, levels: usize },

    #[error("no pixel pairs for offset ({dy}, {dx}) in a {width}x{height} matrix")]
    NoPairs { dy: isize, dx: isize, width: usize, height: usize },

    #[error("band {width}x{height} is too small (need at least {min}x{min})")]
    BandTooSmall { width: usize, height: usize, min: usize },

    #[error("plane {width}x{height} is too small for edge detection (need at least 3x3)")]
    PlaneTooSmall { width: usize, height: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },

    #[error("template has no config hash")]
    ConfigHashMissing,

    #[error("feature vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("finger {0} is not enrolled")]
    UnknownFinger(u32),

    #[error("config hash mismatch: store has {expected}, probe has {found}")]
    ConfigMismatch { expected: String, found: String },

    #[error("impostor finger {0} is also enrolled")]
    Overlap(u32),

    #[error("template store is empty")]
    EmptyStore,

    #[error("thresholds must be non-empty, finite and strictly increasing")]
    BadThresholds,

    #[error("non-finite feature value at index {0}")]
    NonFiniteFeature(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path.into())
        } else {
            Error::Io {
                path: path.into(),
                source,
            }
        }
    }
}
