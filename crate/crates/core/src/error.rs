use std::path::PathBuf;

use crate::model::LayoutId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty partition")]
    EmptyPartition,
    #[error("row {row} out of range for dataset with {num_rows} rows")]
    RowOutOfRange { row: usize, num_rows: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("no states")]
    NoStates,
    #[error("cost out of range: state {state} has cost {cost}")]
    CostOutOfRange { state: LayoutId, cost: f64 },
    #[error("missing cost for active state {0}")]
    MissingCost(LayoutId),
    #[error("duplicate state {0}")]
    DuplicateState(LayoutId),
    #[error("unknown state {0}")]
    UnknownState(LayoutId),
    #[error("state {state} referenced outside availability at event {event}")]
    OutsideAvailability { event: usize, state: LayoutId },
    #[error("no evaluation sample")]
    NoEvaluationSample,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
