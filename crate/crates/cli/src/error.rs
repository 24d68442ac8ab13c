use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Core(#[from] hilbert_laplace::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// Short machine-readable tag for the error line on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Core(_) => "numerics",
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
            CliError::Pool(_) => "threads",
        }
    }
}
