use thiserror::Error;

use crate::autodiff::AutodiffError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty batch passed to {0}")]
    EmptyBatch(&'static str),
    #[error("invalid task distribution: {0}")]
    InvalidDistribution(String),
    #[error("unknown task family `{0}`")]
    UnknownFamily(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite {what} at task {task}, shot count {shots}")]
    NumericalFailure {
        what: &'static str,
        task: usize,
        shots: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("verification grid problem: {0}")]
    Grid(String),
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    /// True for failures caused by non-finite arithmetic rather than bad
    /// input or IO.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. } | Error::Autodiff(AutodiffError::NonFinite { .. })
        )
    }
}
