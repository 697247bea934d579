use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Core(#[from] subspace_vqe::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("no data: {0}")]
    NoData(String),
    #[error("{failed} of {total} runs failed; first failure: {first}")]
    RunsFailed {
        failed: usize,
        total: usize,
        first: String,
        code: i32,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn invalid(message: impl Into<String>) -> Self {
        HarnessError::Validation(vec![message.into()])
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for invalid input, 3 for numerical failures, 4 for requests beyond
    /// the simulator's capabilities, 1 for I/O trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Format { .. } | HarnessError::NoData(_) => 2,
            HarnessError::Core(e) => core_exit_code(e),
            HarnessError::Io { .. } => 1,
            HarnessError::RunsFailed { code, .. } => *code,
        }
    }
}

pub fn core_exit_code(e: &subspace_vqe::Error) -> i32 {
    use subspace_vqe::Error as E;
    match e {
        E::Domain(_) => 2,
        E::Capability(_) => 4,
        E::Numerical(_) | E::DegenerateSubspace(_) | E::InconsistentEstimate(_) => 3,
    }
}
