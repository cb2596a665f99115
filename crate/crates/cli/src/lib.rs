//! Library side of the `cyclicspec` binary: configuration, subcommands, the
//! acceptance suite and the output tree they all render into.

pub mod commands;
pub mod config;
pub mod output;
pub mod suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] cyclicspec::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Library(_) | CliError::Failed(_) => 2,
        }
    }
}
