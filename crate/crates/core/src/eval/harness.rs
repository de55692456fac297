use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::metrics::{mean, query_metrics, QueryMetrics};
use crate::dataset::{Snapshot, TemporalDataset};
use crate::drift::{detect, error_sample, error_sample_by_class, DriftReport};
use crate::error::{Error, Result};
use crate::explainer::{ExplainerState, Explanation};
use crate::graph::{Graph, GraphId};
use crate::oracle::Oracle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub dataset: String,
    pub fold: usize,
    pub t: usize,
    pub runtime_s: f64,
    pub correctness_at_1: f64,
    pub correctness_at_k: f64,
    pub sparsity_at_1: f64,
    pub sparsity_at_k: f64,
    pub ged_at_1: f64,
    pub ged_at_k: f64,
    /// Classifier requests issued while processing this snapshot.
    pub oracle_calls: u64,
    /// Requests that were not answered from the label cache.
    pub oracle_calls_distinct: u64,
    pub queries: usize,
    /// Queries that received at least one candidate.
    pub answered: usize,
}

/// Drift test between snapshot `t - 1` and `t`, as seen by one fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub dataset: String,
    pub fold: usize,
    /// `None` for the pooled test, otherwise the inferred class.
    pub class: Option<u8>,
    pub t: usize,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub drifted: bool,
    pub n_prev: usize,
    pub n_curr: usize,
}

impl DriftRecord {
    fn new(dataset: &str, fold: usize, class: Option<u8>, r: DriftReport) -> Self {
        DriftRecord {
            dataset: dataset.to_string(),
            fold,
            class,
            t: r.t,
            ks_statistic: r.ks_statistic,
            p_value: r.p_value,
            drifted: r.drifted,
            n_prev: r.sample_sizes.0,
            n_curr: r.sample_sizes.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FoldOutput {
    pub fold: usize,
    pub records: Vec<MetricsRecord>,
    pub drift: Vec<DriftRecord>,
    pub explanations: Vec<Explanation>,
    pub state: ExplainerState,
}

#[derive(Clone, Debug)]
pub struct FailedFold {
    pub fold: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct CvOutput {
    pub dataset: String,
    pub folds: Vec<FoldOutput>,
    pub failed: Vec<FailedFold>,
}

impl CvOutput {
    pub fn records(&self) -> Vec<MetricsRecord> {
        self.folds.iter().flat_map(|f| f.records.iter().cloned()).collect()
    }

    pub fn drift_records(&self) -> Vec<DriftRecord> {
        self.folds.iter().flat_map(|f| f.drift.iter().cloned()).collect()
    }
}

/// SplitMix64 finaliser, used to derive independent per-fold streams.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Test ids of every fold: one seeded permutation of the snapshot-0 ids,
/// from which fold `f` takes `max(1, round(holdout * n))` consecutive
/// entries (cyclically) starting at `floor(f * n / folds)`.
pub fn fold_splits(ids: &[GraphId], folds: usize, holdout: f64, seed: u64) -> Result<Vec<BTreeSet<GraphId>>> {
    let n = ids.len();
    let n_test = ((holdout * n as f64).round() as usize).max(1);
    if n < 2 || n_test >= n {
        return Err(Error::Dataset(format!(
            "{n} graphs cannot be split into a {n_test}-graph holdout and a training set"
        )));
    }
    let mut perm: Vec<GraphId> = ids.to_vec();
    perm.sort();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..folds)
        .map(|f| {
            let start = f * n / folds;
            (0..n_test).map(|i| perm[(start + i) % n].clone()).collect()
        })
        .collect())
}

fn summarize(
    dataset: &str,
    fold: usize,
    t: usize,
    per_query: &[QueryMetrics],
    runtime_s: f64,
    oracle: (u64, u64),
) -> MetricsRecord {
    let pick = |f: fn(&QueryMetrics) -> Option<f64>| -> f64 {
        let v: Vec<f64> = per_query.iter().filter_map(f).collect();
        mean(&v)
    };
    let c1: Vec<f64> = per_query.iter().map(|q| q.correctness_at_1 as f64).collect();
    let ck: Vec<f64> = per_query.iter().map(|q| q.correctness_at_k as f64).collect();
    MetricsRecord {
        dataset: dataset.to_string(),
        fold,
        t,
        runtime_s,
        correctness_at_1: mean(&c1),
        correctness_at_k: mean(&ck),
        sparsity_at_1: pick(|q| q.sparsity_at_1),
        sparsity_at_k: pick(|q| q.sparsity_at_k),
        ged_at_1: pick(|q| q.ged_at_1),
        ged_at_k: pick(|q| q.ged_at_k),
        oracle_calls: oracle.0,
        oracle_calls_distinct: oracle.1,
        queries: per_query.len(),
        answered: per_query.iter().filter(|q| q.ged_at_1.is_some()).count(),
    }
}

fn explain_queries(
    state: &ExplainerState,
    snapshot: &Snapshot,
    test_ids: &BTreeSet<GraphId>,
) -> Result<(Vec<Explanation>, Vec<QueryMetrics>)> {
    let mut pool: Vec<&Graph> = snapshot.graphs().collect();
    pool.sort_by(|a, b| a.id().cmp(b.id()));
    let errors = state.errors_for(pool.iter().copied());
    let truth = snapshot.labels();
    let queries: Vec<&Graph> = pool.iter().copied().filter(|g| test_ids.contains(g.id())).collect();
    let out: Result<Vec<(Explanation, QueryMetrics)>> = queries
        .par_iter()
        .map(|q| {
            let e = state.explain_with(q, &pool, &errors)?;
            let m = query_metrics(q, &e, &truth, state.config.k)?;
            Ok((e, m))
        })
        .collect();
    Ok(out?.into_iter().unzip())
}

fn drift_between(
    cfg: &RunConfig,
    dataset: &str,
    fold: usize,
    state: &ExplainerState,
    prev: &Snapshot,
    curr: &Snapshot,
) -> Result<Vec<DriftRecord>> {
    let sig = cfg.explainer.drift_significance;
    if cfg.explainer.drift_per_class {
        let a = error_sample_by_class(state, prev)?;
        let b = error_sample_by_class(state, curr)?;
        let mut out = Vec::new();
        for c in 0..2 {
            if a[c].is_empty() || b[c].is_empty() {
                log::warn!("fold {fold}, t = {}: class {c} has no members, drift test skipped", curr.t);
                continue;
            }
            let r = detect(curr.t, &a[c], &b[c], sig)?;
            out.push(DriftRecord::new(dataset, fold, Some(c as u8), r));
        }
        Ok(out)
    } else {
        let r = detect(curr.t, &error_sample(state, prev)?, &error_sample(state, curr)?, sig)?;
        Ok(vec![DriftRecord::new(dataset, fold, None, r)])
    }
}

/// Runs one fold: supervised fit and explanation at t = 0, then for each
/// later snapshot a drift test, an online update and explanation.
pub fn run_fold(
    cfg: &RunConfig,
    dataset_name: &str,
    data: &TemporalDataset,
    oracle: &Oracle,
    fold: usize,
    test_ids: &BTreeSet<GraphId>,
) -> Result<FoldOutput> {
    let s0 = data.snapshot(0).ok_or(Error::EmptyDataset)?;
    let train_ids: BTreeSet<GraphId> = s0.ids().into_iter().filter(|id| !test_ids.contains(id)).collect();
    let mut explainer_cfg = cfg.explainer_config();
    explainer_cfg.gae.seed = derive_seed(explainer_cfg.gae.seed ^ cfg.eval.seed, fold as u64);

    let mut records = Vec::new();
    let mut drift = Vec::new();
    let mut explanations = Vec::new();

    let start = Instant::now();
    let (mut state, fit) = ExplainerState::fit_initial(explainer_cfg, s0, oracle, &train_ids)?;
    let (ex, qm) = explain_queries(&state, s0, test_ids)?;
    let runtime = start.elapsed().as_secs_f64();
    records.push(summarize(dataset_name, fold, 0, &qm, runtime, (fit.oracle_calls, fit.oracle_calls_distinct)));
    explanations.extend(ex);

    for t in 1..=data.horizon() {
        let prev = data.snapshot(t - 1).ok_or(Error::EmptyDataset)?;
        let curr = data.snapshot(t).ok_or(Error::EmptyDataset)?;
        let calls = (oracle.read_counter(), oracle.read_distinct());
        let start = Instant::now();
        drift.extend(drift_between(cfg, dataset_name, fold, &state, prev, curr)?);
        state.adapt(curr)?;
        let (ex, qm) = explain_queries(&state, curr, test_ids)?;
        let runtime = start.elapsed().as_secs_f64();
        let used = (oracle.read_counter() - calls.0, oracle.read_distinct() - calls.1);
        records.push(summarize(dataset_name, fold, t, &qm, runtime, used));
        explanations.extend(ex);
    }
    Ok(FoldOutput { fold, records, drift, explanations, state })
}

/// Cross-validation over the first snapshot's graphs. Folds run in
/// parallel, each with its own oracle instance; a fold that fails is logged
/// and left out.
pub fn run_cv_on(cfg: &RunConfig, data: &TemporalDataset, oracle: &Oracle) -> Result<CvOutput> {
    cfg.validate()?;
    let name = cfg.dataset.display_name();
    let s0 = data.snapshot(0).ok_or(Error::EmptyDataset)?;
    let splits = fold_splits(&s0.ids(), cfg.eval.folds, cfg.eval.holdout, cfg.eval.seed)?;
    let results: Vec<(usize, Result<FoldOutput>)> = splits
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let fold_oracle = Oracle::new(oracle.kind().clone());
            (f, run_fold(cfg, &name, data, &fold_oracle, f, test))
        })
        .collect();
    let mut folds = Vec::new();
    let mut failed = Vec::new();
    for (fold, r) in results {
        match r {
            Ok(out) => folds.push(out),
            Err(e) => {
                log::warn!("fold {fold} failed and is excluded from the aggregates: {e}");
                failed.push(FailedFold { fold, reason: e.to_string() });
            }
        }
    }
    Ok(CvOutput { dataset: name, folds, failed })
}

pub fn run_cv(cfg: &RunConfig) -> Result<CvOutput> {
    let (data, oracle) = cfg.dataset.materialize()?;
    run_cv_on(cfg, &data, &oracle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<GraphId> {
        (0..n).map(|i| GraphId::new(format!("g{i:03}"))).collect()
    }

    #[test]
    fn ten_folds_partition_one_hundred_ids() {
        let splits = fold_splits(&ids(100), 10, 0.1, 7).unwrap();
        let mut seen = BTreeSet::new();
        for s in &splits {
            assert_eq!(s.len(), 10);
            for id in s {
                assert!(seen.insert(id.clone()));
            }
        }
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn split_is_seeded() {
        assert_eq!(fold_splits(&ids(30), 3, 0.1, 1).unwrap(), fold_splits(&ids(30), 3, 0.1, 1).unwrap());
        assert_ne!(fold_splits(&ids(30), 3, 0.1, 1).unwrap(), fold_splits(&ids(30), 3, 0.1, 2).unwrap());
    }

    #[test]
    fn tiny_split_keeps_one_test_graph() {
        let splits = fold_splits(&ids(4), 2, 0.1, 0).unwrap();
        assert!(splits.iter().all(|s| s.len() == 1));
        assert!(fold_splits(&ids(1), 2, 0.1, 0).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: BTreeSet<u64> = (0..10).map(|f| derive_seed(0, f)).collect();
        assert_eq!(s.len(), 10);
    }
}
