use thiserror::Error;

use crate::graph::GraphId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph {graph_id}: {message}")]
    Validation { graph_id: GraphId, message: String },

    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no percentile threshold stored for snapshot {t}")]
    MissingThreshold { t: usize },

    #[error("no training graphs for class {class}")]
    EmptyClass { class: u8 },

    #[error("graph {graph_id} has no label")]
    MissingLabel { graph_id: GraphId },

    #[error("pair set contains a single label; logistic fit needs both classes")]
    SingleLabel,

    #[error("feature {index} has zero variance")]
    DegenerateFeature { index: usize },

    #[error("scorer has not been fitted")]
    NotFitted,

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("sample is empty")]
    EmptySample,

    #[error("expected snapshot {expected}, got {got}")]
    OutOfOrder { expected: usize, got: usize },

    #[error("query graph {0} has zero size")]
    DegenerateQuery(GraphId),

    #[error("no metrics records to report")]
    EmptyRecords,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
