use std::path::PathBuf;

/// Errors surfaced by the samplers, geometry kernels and experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("distance undefined: {0}")]
    UndefinedDistance(String),

    #[error("dimension undefined: {0}")]
    UndefinedDimension(String),

    #[error("outer boundary undefined for cluster {cluster_id}: no exterior component")]
    BoundaryUndefined { cluster_id: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("driving step failure at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },

    #[error("square-root branch failure at step {step}")]
    BranchFailure { step: usize },

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
