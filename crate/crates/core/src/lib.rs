//! Counterfactual explanations for graphs that evolve over time.
//!
//! Two class-specific graph autoencoders learn what each class looks like;
//! a logistic scorer over reconstruction errors and structural similarity
//! ranks candidate counterfactuals inside each snapshot. After the first
//! snapshot the explainer adapts without consulting the classifier, and
//! shifts in reconstruction-error distributions are tested for drift.

pub mod dataset;
pub mod datagen;
pub mod drift;
pub mod error;
pub mod eval;
pub mod explainer;
pub mod gae;
pub mod graph;
pub mod logistic;
pub mod oracle;
pub mod scorer;

pub use dataset::{load_dataset, save_dataset, Member, Snapshot, TemporalDataset};
pub use error::{Error, Result};
pub use graph::{graph_edit_distance, similarity, Class, EditDistance, Graph, GraphId};
pub use oracle::Oracle;
