use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: heatdecode::Error,
    },

    #[error(transparent)]
    Core(#[from] heatdecode::Error),
}

impl CliError {
    pub fn file(path: impl Into<PathBuf>) -> impl FnOnce(heatdecode::Error) -> CliError {
        let path = path.into();
        move |source| CliError::File { path, source }
    }

    /// 0 success, 1 validation, 2 I/O or format, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use heatdecode::Error as E;
        let core = match self {
            CliError::Validation(_) => return 1,
            CliError::File { source, .. } => source,
            CliError::Core(e) => e,
        };
        match core {
            E::InvalidInput(_) | E::InvalidConfig(_) | E::KernelTooLarge { .. } => 1,
            E::Format(_) | E::Schema(_) | E::Io(_) => 2,
            E::FlatHeatmap | E::BoundaryPeak { .. } | E::CollinearAnchors | E::SingularSystem { .. } => 3,
        }
    }
}
