use std::path::PathBuf;

/// Everything a subcommand can fail with, collapsed onto the process exit
/// codes: 64 for usage mistakes, 2 for anything file-shaped, 1 for numeric
/// trouble at runtime.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] pamm_core::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn file(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        CliError::File { path: path.into(), message: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::File { .. } | CliError::Io { .. } => 2,
            CliError::Core(core) => match core {
                // Bad parameters reaching the core (k > b, negative ε, ...)
                // are usage mistakes; wrong matrix dimensions are bad input
                // files; the rest is genuine numeric failure.
                pamm_core::Error::Argument(_) => 64,
                pamm_core::Error::Shape { .. } => 2,
                pamm_core::Error::Numeric(_)
                | pamm_core::Error::UndefinedMetric(_)
                | pamm_core::Error::State(_) => 1,
            },
        }
    }
}
