use thiserror::Error;

use crate::backend::BackendError;
use crate::datasets::DatasetError;
use crate::policy::PolicyError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid score triple: {0}")]
    InvalidScore(String),

    #[error("degenerate score")]
    DegenerateScore,

    #[error(transparent)]
    Backend(#[from] BackendError),

    /// A scoring failure, identifying the pair that failed.
    #[error("scoring premise {premise:?} against {hypothesis:?} failed: {source}")]
    Pair {
        premise: String,
        hypothesis: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error("placeholder error: {0}")]
    Placeholder(String),

    #[error("unknown strategy: {0}")]
    UnknownStrategy(String),

    #[error("unknown supporting task: {0}")]
    UnknownTask(String),

    #[error("metric error: {0}")]
    Metric(String),
}

impl Error {
    /// True when the root cause is a backend or transport failure.
    pub fn is_backend(&self) -> bool {
        match self {
            Error::Backend(_) => true,
            Error::Pair { source, .. } => source.is_backend(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
