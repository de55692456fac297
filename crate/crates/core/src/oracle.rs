//! Omniscient ground-truth classifiers with invocation counters.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::dataset::{Snapshot, TemporalDataset};
use crate::error::{Error, Result};
use crate::graph::{Class, Graph, GraphId};

/// Percentile with linear interpolation between closest ranks
/// (the numpy default). `pct` is in `[0, 100]`.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = pct / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + frac * (v[hi] - v[lo])
    }
}

/// Per-graph statistic the percentile rule thresholds on.
pub fn activity(g: &Graph) -> f64 {
    g.mean_weighted_degree()
}

/// Percentile threshold of a snapshot's per-graph activity.
pub fn snapshot_threshold(s: &Snapshot, pct: f64) -> f64 {
    let acts: Vec<f64> = s.graphs().map(activity).collect();
    percentile(&acts, pct)
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleKind {
    /// Label 1 iff the graph contains a cycle.
    Cycle,
    /// Label 1 iff the graph's activity is at or above the frozen threshold
    /// of its snapshot.
    Percentile { thresholds: BTreeMap<usize, f64> },
}

#[derive(Debug)]
pub struct Oracle {
    kind: OracleKind,
    calls: AtomicU64,
    distinct: AtomicU64,
}

impl Oracle {
    pub fn new(kind: OracleKind) -> Self {
        Oracle {
            kind,
            calls: AtomicU64::new(0),
            distinct: AtomicU64::new(0),
        }
    }

    pub fn cycle() -> Self {
        Oracle::new(OracleKind::Cycle)
    }

    pub fn percentile(thresholds: BTreeMap<usize, f64>) -> Self {
        Oracle::new(OracleKind::Percentile { thresholds })
    }

    /// Freezes one threshold per snapshot from the whole population.
    pub fn percentile_for(d: &TemporalDataset, pct: f64) -> Self {
        let thresholds = d.snapshots.iter().map(|s| (s.t, snapshot_threshold(s, pct))).collect();
        Oracle::percentile(thresholds)
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    fn label(&self, g: &Graph, t: usize) -> Result<Class> {
        match &self.kind {
            OracleKind::Cycle => Ok(Class::from_bool(g.has_cycle())),
            OracleKind::Percentile { thresholds } => {
                let th = thresholds.get(&t).ok_or(Error::MissingThreshold { t })?;
                Ok(Class::from_bool(activity(g) >= *th))
            }
        }
    }

    /// Classifies `g` as observed at time `t`. Each call counts once.
    pub fn classify(&self, g: &Graph, t: usize) -> Result<Class> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.distinct.fetch_add(1, Ordering::SeqCst);
        self.label(g, t)
    }

    /// Label request routed through `cache`: always counted as a call, but
    /// the classifier only runs on a cache miss.
    pub fn lookup(&self, cache: &mut LabelCache, g: &Graph, t: usize) -> Result<Class> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = (g.id().clone(), t);
        if let Some(&c) = cache.labels.get(&key) {
            return Ok(c);
        }
        self.distinct.fetch_add(1, Ordering::SeqCst);
        let c = self.label(g, t)?;
        cache.labels.insert(key, c);
        Ok(c)
    }

    pub fn reset_counter(&self) {
        self.calls.store(0, Ordering::SeqCst);
        self.distinct.store(0, Ordering::SeqCst);
    }

    /// Label requests since the last reset.
    pub fn read_counter(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Classifier evaluations since the last reset (cache misses plus direct calls).
    pub fn read_distinct(&self) -> u64 {
        self.distinct.load(Ordering::SeqCst)
    }
}

/// Per-(graph, snapshot) label memo for [`Oracle::lookup`].
#[derive(Debug, Default, Clone)]
pub struct LabelCache {
    labels: HashMap<(GraphId, usize), Class>,
}

impl LabelCache {
    pub fn get(&self, id: &GraphId, t: usize) -> Option<Class> {
        self.labels.get(&(id.clone(), t)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        Graph::from_edges("path", n, &edges).unwrap()
    }

    #[test]
    fn cycle_oracle_on_tree_and_triangle() {
        let o = Oracle::cycle();
        assert_eq!(o.classify(&path(28), 0).unwrap(), Class::Zero);
        let tri = Graph::from_edges("tri", 3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(o.classify(&tri, 0).unwrap(), Class::One);
    }

    #[test]
    fn counter_counts_and_resets() {
        let o = Oracle::cycle();
        o.reset_counter();
        assert_eq!(o.read_counter(), 0);
        let g = path(4);
        for _ in 0..3 {
            o.classify(&g, 0).unwrap();
        }
        assert_eq!(o.read_counter(), 3);
        assert_eq!(o.read_counter(), 3);
        o.reset_counter();
        assert_eq!(o.read_counter(), 0);
    }

    #[test]
    fn cached_lookups_count_requests_but_classify_once() {
        let o = Oracle::cycle();
        let mut cache = LabelCache::default();
        let g = path(5);
        for _ in 0..4 {
            o.lookup(&mut cache, &g, 0).unwrap();
        }
        assert_eq!(o.read_counter(), 4);
        assert_eq!(o.read_distinct(), 1);
    }

    #[test]
    fn percentile_matches_linear_interpolation() {
        // positions: 0.75 * 3 = 2.25 -> 3 + 0.25 * (10 - 3)
        assert!((percentile(&[1.0, 2.0, 3.0, 10.0], 75.0) - 4.75).abs() < 1e-12);
        assert!((percentile(&[10.0, 1.0], 75.0) - 7.75).abs() < 1e-12);
        assert_eq!(percentile(&[4.0, 4.0, 4.0], 75.0), 4.0);
    }

    #[test]
    fn percentile_oracle_marks_only_top_ego() {
        // Single-edge graphs on 2 nodes: mean weighted degree equals the weight.
        let egos: Vec<Graph> = [1.0, 2.0, 3.0, 10.0]
            .iter()
            .enumerate()
            .map(|(i, &w)| Graph::from_edges(format!("e{i}").as_str(), 2, &[(0, 1, w)]).unwrap())
            .collect();
        let acts: Vec<f64> = egos.iter().map(activity).collect();
        let o = Oracle::percentile(BTreeMap::from([(0, percentile(&acts, 75.0))]));
        let labels: Vec<Class> = egos.iter().map(|g| o.classify(g, 0).unwrap()).collect();
        assert_eq!(labels, vec![Class::Zero, Class::Zero, Class::Zero, Class::One]);
    }

    #[test]
    fn percentile_oracle_requires_threshold() {
        let o = Oracle::percentile(BTreeMap::new());
        assert!(matches!(o.classify(&path(3), 4), Err(Error::MissingThreshold { t: 4 })));
    }
}
