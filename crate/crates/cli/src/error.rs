use std::path::PathBuf;

/// CLI failures, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("design shape mismatch: {0}")]
    Shape(String),
    #[error("{stage}: {} ({source})", source.name())]
    Numerical {
        stage: String,
        #[source]
        source: altdesign_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Shape(_) | CliError::Csv { .. } => 2,
            CliError::Numerical { .. } | CliError::Io { .. } => 3,
        }
    }

    /// Core error variant name for numerical failures, else the CLI category.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "Config",
            CliError::Shape(_) => "Shape",
            CliError::Numerical { source, .. } => source.name(),
            CliError::Io { .. } => "Io",
            CliError::Csv { .. } => "Csv",
        }
    }

    pub fn numerical(stage: impl Into<String>) -> impl FnOnce(altdesign_core::Error) -> CliError {
        let stage = stage.into();
        move |source| CliError::Numerical { stage, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
