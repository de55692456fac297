//! Metrics, cross-validation harness and report writers.

pub mod config;
pub mod harness;
pub mod metrics;
pub mod report;

pub use config::{DatasetSection, EvalSection, ExplainerSection, Family, RunConfig};
pub use harness::{derive_seed, fold_splits, run_cv, run_cv_on, run_fold, CvOutput, DriftRecord, FoldOutput, MetricsRecord};
pub use metrics::{correctness_at, sparsity};
pub use report::{aggregate, read_records, write_drift, write_report, AggregateRow};
