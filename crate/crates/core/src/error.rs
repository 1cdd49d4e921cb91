use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported image format (magic {0:?}); expected P5 or P6")]
    UnsupportedFormat(String),
    #[error("unsupported bit depth: maxval {0} (only 255 is supported)")]
    UnsupportedBitDepth(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("degenerate polygon: {0} vertices (need at least 3)")]
    DegeneratePolygon(usize),
    #[error("gaussian sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("frame {frame}: expected 68 points, found {found}")]
    LandmarkCount { frame: i64, found: usize },
    #[error("frame {frame}: {message}")]
    LandmarkFormat { frame: i64, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("degenerate face: landmarks are collinear")]
    DegenerateFace,
    #[error("face outside frame")]
    FaceOutsideFrame,
    #[error("face too small: larger bbox side {side:.1}px is below {min}px")]
    FaceTooSmall { side: f64, min: f64 },
    #[error("unknown glasses style {0:?}")]
    UnknownStyle(String),
    #[error("unknown mask texture {0:?}")]
    UnknownTexture(String),
    #[error("invalid occlusion {0:?}")]
    InvalidOcclusion(String),
    #[error("invalid asset pack: {0}")]
    InvalidAssets(String),
    #[error("zero-area face hull")]
    ZeroAreaHull,
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("no background: face box covers the whole frame")]
    NoBackground,
    #[error("need at least {needed} items, found {found}")]
    TooFew { needed: usize, found: usize },
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("score set must contain both bonafide and attack samples")]
    MissingClass,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{command}: {context}: {source}")]
    Pipeline {
        command: &'static str,
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the harness command and the file / sample it concerns.
    pub fn in_command(self, command: &'static str, context: impl Into<String>) -> Self {
        Error::Pipeline {
            command,
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
