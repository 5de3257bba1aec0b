use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{name}: {0}", name = .0.name())]
    Library(#[from] wvkit::Error),
    #[error("NonFiniteResult: {0} is not finite")]
    NonFinite(&'static str),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 3 for physically undefined results, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Library(e) if e.is_physics() => 3,
            CliError::Library(_) => 2,
            CliError::NonFinite(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}
