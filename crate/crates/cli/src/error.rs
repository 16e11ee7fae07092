use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    /// Every problem found while resolving a configuration.
    #[error("{}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Core(#[from] ganlab::Error),

    /// A check command ran to completion and its property failed.
    #[error("{0}")]
    Check(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {reason}")]
    Csv { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn config(problem: impl Into<String>) -> Self {
        CliError::Config(vec![problem.into()])
    }

    /// Short machine-readable category.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Check(_) => "check",
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "csv",
            CliError::Core(e) => match e {
                ganlab::Error::DimensionMismatch { .. } => "dimension",
                ganlab::Error::InvalidArgument { .. } => "invalid",
                ganlab::Error::OutOfBounds { .. } => "out_of_bounds",
                ganlab::Error::PlacementExhausted { .. } => "placement",
                ganlab::Error::EmptyDataset => "empty_dataset",
                ganlab::Error::NonBinaryPixel { .. } => "non_binary",
                ganlab::Error::Diverged { .. } => "diverged",
                ganlab::Error::Format { .. } => "format",
                ganlab::Error::Io { .. } => "io",
            },
        }
    }

    /// `error: <code>: <message>` on a single line.
    pub fn line(&self) -> String {
        let msg: String = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error: {}: {msg}", self.code())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
