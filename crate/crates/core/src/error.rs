use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("temperature must be >= 1, got {0}")]
    TemperatureBelowOne(f64),

    #[error("operation requires a Gaussian mixture target")]
    NotAMixture,

    #[error("need at least {needed} modes, have {found}")]
    TooFewModes { needed: usize, found: usize },

    #[error("series too short: need at least {needed} values, have {found}")]
    TooShort { needed: usize, found: usize },

    #[error("fit impossible: {0}")]
    DegenerateFit(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("missing seed: set `master_seed` in the config or pass --seed")]
    MissingSeed,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
