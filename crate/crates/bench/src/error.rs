use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] amr_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        BenchError::Csv {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from invalid user input rather than a failed run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            BenchError::Config(_)
                | BenchError::Toml { .. }
                | BenchError::Core(amr_core::Error::Config(_))
        )
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
