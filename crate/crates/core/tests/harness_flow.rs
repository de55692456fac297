use std::collections::BTreeSet;

use dygrace::eval::metrics::{mean, std_dev};
use dygrace::eval::{aggregate, fold_splits, read_records, run_cv, write_report, Family, MetricsRecord, RunConfig};
use dygrace::gae::GaeTrainConfig;
use dygrace::GraphId;

fn small_run(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default().with_seed(seed);
    cfg.dataset.family = Family::TreeCycles;
    cfg.dataset.tree_cycles.num_graphs = 20;
    cfg.dataset.tree_cycles.nodes_per_graph = 10;
    cfg.dataset.tree_cycles.num_snapshots = 3;
    cfg.model = Some(GaeTrainConfig { epochs: 10, ..Default::default() });
    cfg.eval.folds = 2;
    cfg.eval.holdout = 0.5;
    cfg.explainer.k = 3;
    cfg
}

fn without_runtime(rs: &[MetricsRecord]) -> Vec<MetricsRecord> {
    rs.iter().cloned().map(|mut r| {
        r.runtime_s = 0.0;
        r
    }).collect()
}

#[test]
fn folds_partition_the_ids() {
    let ids: Vec<GraphId> = (0..100).map(|i| GraphId::new(format!("g{i:03}"))).collect();
    let splits = fold_splits(&ids, 10, 0.1, 3).unwrap();
    assert_eq!(splits.len(), 10);
    let mut seen = BTreeSet::new();
    for s in &splits {
        assert_eq!(s.len(), 10);
        for id in s {
            assert!(seen.insert(id.clone()));
        }
    }
    assert_eq!(seen.len(), 100);
    assert_eq!(splits, fold_splits(&ids, 10, 0.1, 3).unwrap());
    assert_ne!(splits, fold_splits(&ids, 10, 0.1, 4).unwrap());
    assert!(fold_splits(&ids[..3], 2, 0.5, 0).unwrap().iter().all(|s| s.len() == 2));
}

#[test]
fn one_record_per_fold_and_snapshot() {
    let cv = run_cv(&small_run(0)).unwrap();
    assert!(cv.failed.is_empty(), "{:?}", cv.failed);
    let rs = cv.records();
    assert_eq!(rs.len(), 2 * 3);
    for f in 0..2 {
        let ts: Vec<usize> = rs.iter().filter(|r| r.fold == f).map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 1, 2]);
    }
    for r in &rs {
        assert!(r.runtime_s > 0.0);
        assert_eq!(r.queries, 10);
        assert!(r.correctness_at_1 <= r.correctness_at_k);
        if r.t == 0 {
            assert_eq!(r.oracle_calls, 10 * 20);
            assert_eq!(r.oracle_calls_distinct, 20);
        } else {
            assert_eq!(r.oracle_calls, 0);
        }
    }
    assert_eq!(cv.drift_records().len(), 2 * 2);
}

#[test]
fn report_round_trips_through_csv() {
    let rs = run_cv(&small_run(1)).unwrap().records();
    let dir = tempfile::tempdir().unwrap();
    let files = write_report(&rs, dir.path()).unwrap();
    let back = read_records(&files.metrics).unwrap();
    assert_eq!(back, rs);

    let agg = aggregate(&back);
    assert_eq!(agg.len(), 3);
    for row in &agg {
        let col: Vec<f64> = back.iter().filter(|r| r.t == row.t).map(|r| r.correctness_at_1).collect();
        assert!((row.correctness_at_1_mean - mean(&col)).abs() < 1e-9);
        assert!((row.correctness_at_1_std - std_dev(&col)).abs() < 1e-9);
        let calls: Vec<f64> = back.iter().filter(|r| r.t == row.t).map(|r| r.oracle_calls as f64).collect();
        assert!((row.oracle_calls_mean - mean(&calls)).abs() < 1e-9);
    }
    assert!(write_report(&[], dir.path()).is_err());
}

#[test]
fn runs_repeat_exactly() {
    let a = run_cv(&small_run(2)).unwrap();
    let b = run_cv(&small_run(2)).unwrap();
    assert_eq!(without_runtime(&a.records()), without_runtime(&b.records()));
    assert_eq!(a.drift_records(), b.drift_records());
}

#[test]
fn invalid_settings_are_rejected() {
    let mut cfg = small_run(0);
    cfg.eval.folds = 0;
    assert!(run_cv(&cfg).is_err());
    let mut cfg = small_run(0);
    cfg.explainer.k = 0;
    assert!(run_cv(&cfg).is_err());
    assert!(RunConfig::from_toml_str("[eval]\nfolds = \"ten\"").is_err());
}
