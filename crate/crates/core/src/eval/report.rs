use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::harness::{DriftRecord, MetricsRecord};
use super::metrics::{mean, std_dev};
use crate::error::{Error, Result};

/// Mean and population standard deviation across folds for one
/// `(dataset, t)` cell, columns in the order of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub t: usize,
    pub folds: usize,
    pub runtime_s_mean: f64,
    pub runtime_s_std: f64,
    pub correctness_at_1_mean: f64,
    pub correctness_at_1_std: f64,
    pub correctness_at_k_mean: f64,
    pub correctness_at_k_std: f64,
    pub sparsity_at_1_mean: f64,
    pub sparsity_at_1_std: f64,
    pub sparsity_at_k_mean: f64,
    pub sparsity_at_k_std: f64,
    pub ged_at_1_mean: f64,
    pub ged_at_1_std: f64,
    pub ged_at_k_mean: f64,
    pub ged_at_k_std: f64,
    pub oracle_calls_mean: f64,
    pub oracle_calls_std: f64,
}

/// Mean and deviation over finite values only; a fold whose queries all
/// went unanswered contributes no distance.
fn stats(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    (mean(&v), std_dev(&v))
}

pub fn aggregate(records: &[MetricsRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, usize), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.dataset.as_str(), r.t)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, t), rs)| {
            let col = |f: fn(&MetricsRecord) -> f64| stats(rs.iter().map(|r| f(r)));
            let rt = col(|r| r.runtime_s);
            let c1 = col(|r| r.correctness_at_1);
            let ck = col(|r| r.correctness_at_k);
            let s1 = col(|r| r.sparsity_at_1);
            let sk = col(|r| r.sparsity_at_k);
            let g1 = col(|r| r.ged_at_1);
            let gk = col(|r| r.ged_at_k);
            let oc = col(|r| r.oracle_calls as f64);
            AggregateRow {
                dataset: dataset.to_string(),
                t,
                folds: rs.len(),
                runtime_s_mean: rt.0,
                runtime_s_std: rt.1,
                correctness_at_1_mean: c1.0,
                correctness_at_1_std: c1.1,
                correctness_at_k_mean: ck.0,
                correctness_at_k_std: ck.1,
                sparsity_at_1_mean: s1.0,
                sparsity_at_1_std: s1.1,
                sparsity_at_k_mean: sk.0,
                sparsity_at_k_std: sk.1,
                ged_at_1_mean: g1.0,
                ged_at_1_std: g1.1,
                ged_at_k_mean: gk.0,
                ged_at_k_std: gk.1,
                oracle_calls_mean: oc.0,
                oracle_calls_std: oc.1,
            }
        })
        .collect()
}

fn sorted_records(records: &[MetricsRecord]) -> Vec<&MetricsRecord> {
    let mut v: Vec<&MetricsRecord> = records.iter().collect();
    v.sort_by(|a, b| (&a.dataset, a.fold, a.t).cmp(&(&b.dataset, b.fold, b.t)));
    v
}

pub fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    read_csv(path)
}

/// Paths written by [`write_report`].
#[derive(Clone, Debug)]
pub struct ReportFiles {
    pub metrics: PathBuf,
    pub aggregate: PathBuf,
}

/// Writes `metrics.csv` (one row per fold and snapshot) and `aggregate.csv`
/// into `dir`, creating it when missing. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_report(records: &[MetricsRecord], dir: impl AsRef<Path>) -> Result<ReportFiles> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        metrics: dir.join("metrics.csv"),
        aggregate: dir.join("aggregate.csv"),
    };
    write_csv(sorted_records(records), &files.metrics)?;
    write_csv(aggregate(records), &files.aggregate)?;
    Ok(files)
}

pub fn write_drift(records: &[DriftRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut v: Vec<&DriftRecord> = records.iter().collect();
    v.sort_by(|a, b| (&a.dataset, a.fold, a.t, a.class).cmp(&(&b.dataset, b.fold, b.t, b.class)));
    write_csv(v, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(fold: usize, t: usize, c1: f64) -> MetricsRecord {
        MetricsRecord {
            dataset: "toy".into(),
            fold,
            t,
            runtime_s: 0.125,
            correctness_at_1: c1,
            correctness_at_k: 1.0,
            sparsity_at_1: 0.5,
            sparsity_at_k: 0.6,
            ged_at_1: 10.0,
            ged_at_k: 12.0,
            oracle_calls: 0,
            oracle_calls_distinct: 0,
            queries: 10,
            answered: 10,
        }
    }

    #[test]
    fn std_positive_only_when_values_differ() {
        let agg = aggregate(&[record(0, 1, 0.4), record(1, 1, 0.6)]);
        assert_eq!(agg.len(), 1);
        assert!((agg[0].correctness_at_1_mean - 0.5).abs() < 1e-15);
        assert!(agg[0].correctness_at_1_std > 0.0);
        assert_eq!(agg[0].correctness_at_k_std, 0.0);
        assert_eq!(agg[0].folds, 2);
    }

    #[test]
    fn single_record_report() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(&[record(0, 0, 1.0 / 3.0)], dir.path()).unwrap();
        let text = fs::read_to_string(&files.metrics).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("dataset,fold,t,runtime_s,correctness_at_1,correctness_at_k,"));
        let back = read_records(&files.metrics).unwrap();
        assert_eq!(back, vec![record(0, 0, 1.0 / 3.0)]);
    }

    #[test]
    fn empty_records_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(write_report(&[], dir.path()), Err(Error::EmptyRecords)));
    }

    #[test]
    fn nan_distances_skipped_in_aggregate() {
        let mut a = record(0, 0, 1.0);
        a.ged_at_1 = f64::NAN;
        let agg = aggregate(&[a, record(1, 0, 1.0)]);
        assert_eq!(agg[0].ged_at_1_mean, 10.0);
    }
}
