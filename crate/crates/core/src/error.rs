use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("calibration region is empty or has non-positive mean")]
    ZeroCalibration,
    #[error("image is constant; unit-range rescale is undefined")]
    ConstantImage,
    #[error("gray-level count must be at least 2, got {0}")]
    BadBinCount(usize),
    #[error("patch side {side} px is below the {min} px minimum for {filter}")]
    PatchTooSmall {
        side: usize,
        min: usize,
        filter: String,
    },
    #[error("patch is empty")]
    EmptyPatch,
    #[error("degenerate texture matrix: {0}")]
    DegenerateMatrix(String),
    #[error("no eligible patch center for label {label} in slice {slice_id}")]
    EmptyRoi { slice_id: String, label: u8 },
    #[error("dose group {0} has fewer than 2 slices")]
    GroupTooSmall(u8),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("k = {k} outside 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fold holding out {0} leaves a single class in training")]
    FoldDegenerate(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("linear system is singular")]
    SingularSystem,
    #[error("per-scale center lists differ")]
    CenterMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("missing metrics: {0}")]
    MissingMetrics(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("malformed artifact {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("artifact {path} was produced with config hash {found}, expected {expected}")]
    ConfigHashMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error on {path}: {reason}")]
    Codec { path: String, reason: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            BadConfig(_) | BadBinCount(_) | BadK { .. } | ConfigHashMismatch { .. } => {
                ErrorKind::Config
            }
            SingularSystem | DegenerateMatrix(_) | NonFiniteInput => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            reason: reason.into(),
        }
    }
}
