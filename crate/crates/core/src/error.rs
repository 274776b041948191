use thiserror::Error;

/// Errors produced by the fitting, segmentation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("CSV parse error at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("segment ({l}, {k}] has {len} observations, at least {min} required")]
    SegmentTooShort { l: usize, k: usize, len: usize, min: usize },

    #[error("segment ({l}, {k}]: {message}")]
    Segment { l: usize, k: usize, message: String },

    #[error("{k} change-points need at least {required} observations, have {n}")]
    Infeasible { k: usize, required: usize, n: usize },

    #[error("inadmissible change-points: {0}")]
    InadmissibleBreaks(String),

    #[error("simplex exceeded {limit} pivots")]
    IterationLimit { limit: usize },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("singular design: {0}")]
    Singular(String),

    #[error("coordinate descent did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("non-positive scale estimate {0}")]
    NonPositiveScale(f64),

    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
