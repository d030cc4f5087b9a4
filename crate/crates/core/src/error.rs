use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("npy: bad magic string at byte {offset}")]
    BadMagic { offset: usize },
    #[error("npy: unsupported format version {major}.{minor}")]
    UnsupportedVersion { major: u8, minor: u8 },
    #[error("npy: malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("npy: unsupported dtype {0:?}")]
    UnsupportedDtype(String),
    #[error("npy: fortran-ordered arrays are not supported")]
    FortranOrder,
    #[error("npy: unsupported shape {0:?} (expected 1-D or 2-D with non-zero extents)")]
    UnsupportedShape(Vec<usize>),
    #[error("npy: payload truncated at byte {offset}: expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at flat index {index}")]
    NonFiniteValue { index: usize },
    #[error("invalid label {value} at index {index} (labels must be 0 or 1)")]
    InvalidLabel { index: usize, value: f64 },
    #[error("matrix shape {rows}x{dim} does not match {len} values")]
    ShapeMismatch { rows: usize, dim: usize, len: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("{split} labels: {labels} entries for {rows} rows")]
    LabelLengthMismatch {
        split: String,
        rows: usize,
        labels: usize,
    },
    #[error("{0} labels contain a single class")]
    SingleClassLabels(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("variance is zero; skewness and kurtosis are undefined")]
    DegenerateVariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probe training diverged (non-finite loss) in repeat {repeat}, epoch {epoch}")]
    NonFiniteLoss { repeat: usize, epoch: usize },

    #[error("sample size {size} exceeds population {population}")]
    SizeTooLarge { size: usize, population: usize },

    #[error("csv schema mismatch: missing column {0:?}")]
    SchemaMismatch(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("dataset invariant violated: {0}")]
    DatasetInvariant(String),

    #[error("feature order mismatch: model expects {expected:?}, got {found:?}")]
    FeatureOrderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("model version mismatch: file has {found:?}, expected {expected}")]
    VersionMismatch { found: Option<u32>, expected: u32 },
    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure is caused by bad input (files, labels, configs)
    /// rather than by a computation that went wrong at runtime.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NonFiniteLoss { .. } | Error::ThreadPool(_))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
