use std::path::PathBuf;

use crate::ocsvm::OcsvmModel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The dual solver hit its iteration cap. `best` is the last iterate,
    /// usable but without the KKT guarantee.
    #[error("solver did not converge after {iterations} iterations (KKT gap {gap:.3e})")]
    NotConverged {
        best: Box<OcsvmModel>,
        iterations: usize,
        gap: f64,
    },

    #[error("insufficient data in time slice {slice}: {count} point(s), need at least 2")]
    InsufficientData { slice: usize, count: usize },

    #[error("state is outside the estimated support at t = {t} (margin {value:.3e})")]
    OutsideSupport { t: usize, value: f64 },

    #[error("supervisor rollout failed (seed {seed}): {reason}")]
    SupervisorFailure { seed: u64, reason: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
