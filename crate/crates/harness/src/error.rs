use std::path::PathBuf;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Core(unfolded_pgd_core::Error),
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Json { .. } | HarnessError::Core(_) => 2,
            HarnessError::Capability(_) => 3,
            HarnessError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

impl From<unfolded_pgd_core::Error> for HarnessError {
    fn from(e: unfolded_pgd_core::Error) -> Self {
        match e {
            unfolded_pgd_core::Error::Capability(msg) => HarnessError::Capability(msg),
            other => HarnessError::Core(other),
        }
    }
}
