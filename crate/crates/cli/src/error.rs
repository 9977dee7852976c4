use thiserror::Error;

/// Errors surfaced by the harness. Every variant maps to exit status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: String, source: std::io::Error },

    #[error("cannot parse config {path}: {source}")]
    ConfigParse { path: String, source: toml::de::Error },

    #[error("kernel cache {path}: {source}")]
    Cache { path: String, source: szego_core::Error },

    #[error(transparent)]
    Core(#[from] szego_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailure = 1,
    Usage = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}
