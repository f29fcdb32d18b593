use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument `{name}` = {value} is outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid offspring distribution: {0}")]
    Distribution(String),

    #[error("fixed-size sampling is only implemented for geometric and poisson offspring, got {0}")]
    UnsupportedDistribution(String),

    #[error("no accepted sample after {trials} trials (height >= {height} requested)")]
    TrialCapExhausted { trials: u64, height: usize },

    #[error("tree has {vertices} vertices, above the linear-solve limit of {limit}")]
    SizeExceeded { vertices: usize, limit: usize },

    #[error("linear system is singular")]
    Singular,

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
