//! Errors of the file-format and driver layer, with their exit codes.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{path}: dimension overflow ({width}x{height})")]
    DimensionOverflow { path: PathBuf, width: u64, height: u64 },
    #[error("{path}: truncated payload: expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("{path}: unsupported bit depth (maxval {maxval})")]
    UnsupportedDepth { path: PathBuf, maxval: u32 },
    #[error("{path}: invalid mask value {value} (expected 0 or 255)")]
    InvalidMaskValue { path: PathBuf, value: u16 },
    #[error("{path}: line {line}: {reason}")]
    Manifest { path: PathBuf, line: usize, reason: String },
    #[error("missing file reference: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] irseg_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 2,
    Data = 3,
    Numerical = 4,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn label(self) -> &'static str {
        match self {
            ExitKind::Usage => "usage",
            ExitKind::Data => "data",
            ExitKind::Numerical => "numerical",
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_kind(&self) -> ExitKind {
        match self {
            Error::Config(_) | Error::Core(irseg_core::Error::InvalidParameter(_)) => ExitKind::Usage,
            Error::Core(irseg_core::Error::NotPositiveDefinite | irseg_core::Error::NotConverged { .. }) => {
                ExitKind::Numerical
            }
            _ => ExitKind::Data,
        }
    }
}
