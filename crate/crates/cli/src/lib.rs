//! Command-line front end: configuration, the end-to-end pipeline, and the
//! mapping from failures to exit codes.

pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use eigenprofile::ErrorKind;

pub use config::{validate, ConfigError, PipelineConfig, RawConfig};
pub use pipeline::{run_pipeline, PipelineSummary};

pub const EXIT_IO: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_DEGENERATE: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Config(#[from] ConfigError),

    /// A library failure, tagged with the pipeline stage that raised it.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: eigenprofile::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Stage { source, .. } => match source.kind() {
                ErrorKind::Io => EXIT_IO,
                ErrorKind::InvalidInput => EXIT_CONFIG,
                ErrorKind::Numerical => EXIT_NUMERICAL,
                ErrorKind::Degenerate => EXIT_DEGENERATE,
            },
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for eigenprofile::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
