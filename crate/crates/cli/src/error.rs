use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("missing {artifact}: run `{stage}` first")]
    MissingUpstream { artifact: String, stage: &'static str },

    #[error("stale artifacts: {0}")]
    Stale(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] aspect_rank::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for problems the user can fix (inputs, config, ordering), 2 for
    /// numerical or internal failures.
    pub fn exit_code(&self) -> i32 {
        use aspect_rank::Error as E;
        match self {
            CliError::Core(
                E::NotConverged { .. }
                | E::DimensionMismatch { .. }
                | E::NonFinite { .. }
                | E::Degenerate(_)
                | E::ConstantSeries
                | E::EmptyGraph
                | E::UnknownNode(_),
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
