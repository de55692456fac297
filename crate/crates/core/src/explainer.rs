//! The explainer: supervised fit on the first snapshot, then per-snapshot
//! inference and contrastive adaptation that never consult the classifier.
//! Also hosts the oracle-driven similarity-search baseline.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dataset::Snapshot;
use crate::error::{Error, Result};
use crate::gae::{Direction, GaeModel, GaeTrainConfig};
use crate::graph::{graph_edit_distance, similarity_from_ged, Class, Graph, GraphId};
use crate::oracle::{LabelCache, Oracle};
use crate::scorer::{build_pair_training_set, rank_with_errors, ErrorTable, PairScorer, RankedCandidate};

/// Step sizes for the online updates. Unset values fall back to the initial
/// training config, with a fifth of its epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptConfig {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    /// Also minimise each autoencoder on the graphs inferred as its class.
    pub rehearsal: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig { epochs: None, learning_rate: None, rehearsal: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerConfig {
    pub k: usize,
    pub gae: GaeTrainConfig,
    pub adapt: AdaptConfig,
    pub l2_lambda: f64,
    /// Restrict candidates to graphs inferred as the opposite class.
    pub pool_filter: bool,
    /// Start each scorer refit from the previous parameters.
    pub warm_start: bool,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            k: 10,
            gae: GaeTrainConfig::default(),
            adapt: AdaptConfig::default(),
            l2_lambda: 1.0,
            pool_filter: false,
            warm_start: false,
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return Err(Error::Config("l2_lambda must be non-negative".into()));
        }
        self.gae.validate()?;
        self.adapt_train_config().validate()
    }

    pub fn adapt_train_config(&self) -> GaeTrainConfig {
        GaeTrainConfig {
            epochs: self.adapt.epochs.unwrap_or((self.gae.epochs / 5).max(1)),
            learning_rate: self.adapt.learning_rate.unwrap_or(self.gae.learning_rate),
            ..self.gae.clone()
        }
    }
}

/// Output of one explanation request. An empty `ranked` list means no
/// candidate was available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub t: usize,
    pub query_id: GraphId,
    pub inferred_class: Class,
    pub ranked: Vec<RankedCandidate>,
}

impl Explanation {
    pub fn found(&self) -> bool {
        !self.ranked.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// Label requests made to the classifier.
    pub oracle_calls: u64,
    /// Distinct classifier evaluations behind those requests.
    pub oracle_calls_distinct: u64,
    pub class_sizes: [usize; 2],
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptReport {
    pub t: usize,
    /// Deduplicated candidate counts targeted at each class.
    pub targeted: [usize; 2],
    /// Graphs inferred as each class after the update.
    pub inferred: [usize; 2],
    pub pairs: usize,
    /// False when the pair set had a single label and the old scorer was kept.
    pub scorer_refit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainerState {
    pub f0: GaeModel,
    pub f1: GaeModel,
    pub scorer: PairScorer,
    pub current_t: usize,
    pub config: ExplainerConfig,
    /// Graph ids whose pairs train the scorer.
    pub train_ids: BTreeSet<GraphId>,
    /// Classifier labels of the first snapshot.
    pub initial_labels: BTreeMap<GraphId, Class>,
}

fn sorted_graphs(s: &Snapshot) -> Vec<&Graph> {
    let mut v: Vec<&Graph> = s.graphs().collect();
    v.sort_by(|a, b| a.id().cmp(b.id()));
    v
}

impl ExplainerState {
    /// Supervised fit on the first snapshot.
    ///
    /// Every `(train graph, snapshot graph)` combination requests the
    /// candidate's label from `oracle` through a per-snapshot cache.
    pub fn fit_initial(
        config: ExplainerConfig,
        snapshot0: &Snapshot,
        oracle: &Oracle,
        train_ids: &BTreeSet<GraphId>,
    ) -> Result<(ExplainerState, FitReport)> {
        config.validate()?;
        if snapshot0.t != 0 {
            return Err(Error::OutOfOrder { expected: 0, got: snapshot0.t });
        }
        let all = sorted_graphs(snapshot0);
        let train: Vec<&Graph> = all.iter().copied().filter(|g| train_ids.contains(g.id())).collect();
        if train.len() != train_ids.len() {
            return Err(Error::Dataset("train split references graphs missing from snapshot 0".into()));
        }

        let calls_before = oracle.read_counter();
        let distinct_before = oracle.read_distinct();
        let mut cache = LabelCache::default();
        let mut labels = BTreeMap::new();
        for _query in &train {
            for g in &all {
                let c = oracle.lookup(&mut cache, g, 0)?;
                labels.insert(g.id().clone(), c);
            }
        }

        let mut by_class: [Vec<&Graph>; 2] = [Vec::new(), Vec::new()];
        for g in &train {
            by_class[labels[g.id()].index()].push(g);
        }
        for c in Class::BOTH {
            if by_class[c.index()].is_empty() {
                return Err(Error::EmptyClass { class: c.into() });
            }
        }

        let mut f0 = GaeModel::new(Class::Zero, config.gae.seed);
        let mut f1 = GaeModel::new(Class::One, config.gae.seed);
        f0.train(&by_class[0], &config.gae, Direction::Minimize)?;
        f1.train(&by_class[1], &config.gae, Direction::Minimize)?;

        let errors = ErrorTable::compute(all.iter().copied(), &f0, &f1);
        let pairs = build_pair_training_set(&train, &all, &labels, &errors)?;
        let mut scorer = PairScorer::new(config.l2_lambda);
        scorer.fit(&pairs, false)?;

        let report = FitReport {
            oracle_calls: oracle.read_counter() - calls_before,
            oracle_calls_distinct: oracle.read_distinct() - distinct_before,
            class_sizes: [by_class[0].len(), by_class[1].len()],
            pairs: pairs.len(),
        };
        let state = ExplainerState {
            f0,
            f1,
            scorer,
            current_t: 0,
            config,
            train_ids: train_ids.clone(),
            initial_labels: labels,
        };
        Ok((state, report))
    }

    pub fn model(&self, c: Class) -> &GaeModel {
        match c {
            Class::Zero => &self.f0,
            Class::One => &self.f1,
        }
    }

    fn model_mut(&mut self, c: Class) -> &mut GaeModel {
        match c {
            Class::Zero => &mut self.f0,
            Class::One => &mut self.f1,
        }
    }

    /// Class whose autoencoder reconstructs `g` best; ties go to class 0.
    pub fn infer_class(&self, g: &Graph) -> Class {
        class_from_errors([self.f0.reconstruction_error(g), self.f1.reconstruction_error(g)])
    }

    pub fn errors_for<'a>(&self, graphs: impl IntoIterator<Item = &'a Graph>) -> ErrorTable {
        ErrorTable::compute(graphs, &self.f0, &self.f1)
    }

    /// Ranks counterfactual candidates for `query` among `pool`.
    pub fn explain(&self, query: &Graph, pool: &[&Graph]) -> Result<Explanation> {
        let errors = self.errors_for(pool.iter().copied().chain(std::iter::once(query)));
        self.explain_with(query, pool, &errors)
    }

    /// [`explain`](Self::explain) with errors already computed for the query
    /// and every pool graph.
    pub fn explain_with(&self, query: &Graph, pool: &[&Graph], errors: &ErrorTable) -> Result<Explanation> {
        let h = errors
            .get(query.id())
            .ok_or_else(|| Error::Dataset(format!("no reconstruction errors for query {}", query.id())))?;
        let inferred = class_from_errors(h);
        let candidates: Vec<&Graph> = if self.config.pool_filter {
            pool.iter()
                .copied()
                .filter(|c| errors.get(c.id()).map(class_from_errors) != Some(inferred))
                .collect()
        } else {
            pool.to_vec()
        };
        let ranked = rank_with_errors(&self.scorer, query, &candidates, errors, inferred, self.config.k)?;
        Ok(Explanation {
            t: self.current_t,
            query_id: query.id().clone(),
            inferred_class: inferred,
            ranked,
        })
    }

    /// Moves the explainer to the next snapshot without the classifier.
    pub fn adapt(&mut self, snapshot: &Snapshot) -> Result<AdaptReport> {
        if snapshot.t != self.current_t + 1 {
            return Err(Error::OutOfOrder {
                expected: self.current_t + 1,
                got: snapshot.t,
            });
        }
        let all = sorted_graphs(snapshot);
        let errors = self.errors_for(all.iter().copied());
        let inferred: BTreeMap<&GraphId, Class> = all
            .iter()
            .map(|g| (g.id(), class_from_errors(errors.get(g.id()).expect("computed above"))))
            .collect();

        let by_id: BTreeMap<&GraphId, &Graph> = all.iter().map(|g| (g.id(), *g)).collect();
        // Candidates proposed for a class-c query are meant to be of class 1 - c.
        let mut targeted: [BTreeSet<&GraphId>; 2] = [BTreeSet::new(), BTreeSet::new()];
        for q in &all {
            let e = self.explain_with(q, &all, &errors)?;
            let target = e.inferred_class.opposite();
            for r in &e.ranked {
                if let Some((id, _)) = by_id.get_key_value(&r.graph_id) {
                    targeted[target.index()].insert(*id);
                }
            }
        }
        let pick = |ids: &BTreeSet<&GraphId>| ids.iter().map(|id| by_id[id]).collect::<Vec<&Graph>>();
        let cf_sets = [pick(&targeted[0]), pick(&targeted[1])];
        let own: [Vec<&Graph>; 2] = Class::BOTH.map(|c| all.iter().copied().filter(|g| inferred[g.id()] == c).collect());

        let cfg = self.config.adapt_train_config();
        let rehearsal = self.config.adapt.rehearsal;
        for c in Class::BOTH {
            let toward = &cf_sets[c.index()];
            let away = &cf_sets[c.opposite().index()];
            if toward.is_empty() {
                warn!("t = {}: no candidates targeted at class {c}; skipping its update", snapshot.t);
            }
            let model = self.model_mut(c);
            if !toward.is_empty() {
                model.train(toward, &cfg, Direction::Minimize)?;
            }
            if !away.is_empty() {
                model.train(away, &cfg, Direction::Maximize)?;
            }
            if rehearsal && !own[c.index()].is_empty() {
                model.train(&own[c.index()], &cfg, Direction::Minimize)?;
            }
        }

        let errors = self.errors_for(all.iter().copied());
        let labels: BTreeMap<GraphId, Class> = all
            .iter()
            .map(|g| (g.id().clone(), class_from_errors(errors.get(g.id()).expect("computed above"))))
            .collect();
        let mut inferred_counts = [0, 0];
        for c in labels.values() {
            inferred_counts[c.index()] += 1;
        }
        let train: Vec<&Graph> = all.iter().copied().filter(|g| self.train_ids.contains(g.id())).collect();
        let pairs = build_pair_training_set(&train, &all, &labels, &errors)?;
        let scorer_refit = match self.scorer.fit(&pairs, self.config.warm_start) {
            Ok(()) => true,
            Err(Error::SingleLabel) | Err(Error::DegenerateFeature { .. }) => {
                warn!("t = {}: inferred pairs cannot refit the scorer; keeping the previous one", snapshot.t);
                false
            }
            Err(e) => return Err(e),
        };
        self.current_t = snapshot.t;
        Ok(AdaptReport {
            t: snapshot.t,
            targeted: [cf_sets[0].len(), cf_sets[1].len()],
            inferred: inferred_counts,
            pairs: pairs.len(),
            scorer_refit,
        })
    }
}

pub(crate) fn class_from_errors(h: [f64; 2]) -> Class {
    if h[0] <= h[1] {
        Class::Zero
    } else {
        Class::One
    }
}

/// Most similar pool graph whose classifier label differs from the query's.
/// Consults the oracle once for the query and once per other pool graph.
pub fn baseline_dce(query: &Graph, pool: &[&Graph], oracle: &Oracle, t: usize) -> Result<Explanation> {
    let qc = oracle.classify(query, t)?;
    let mut best: Option<RankedCandidate> = None;
    for c in pool.iter().filter(|c| c.id() != query.id()) {
        if oracle.classify(c, t)? == qc {
            continue;
        }
        let ged = graph_edit_distance(query, c).ged;
        let sim = similarity_from_ged(ged);
        let better = match &best {
            None => true,
            Some(b) => sim > b.sim || (sim == b.sim && c.id() < &b.graph_id),
        };
        if better {
            best = Some(RankedCandidate {
                graph_id: c.id().clone(),
                score: sim,
                ged,
                sim,
            });
        }
    }
    Ok(Explanation {
        t,
        query_id: query.id().clone(),
        inferred_class: qc,
        ranked: best.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_tie_goes_to_zero() {
        assert_eq!(class_from_errors([0.5, 0.5]), Class::Zero);
        assert_eq!(class_from_errors([0.6, 0.5]), Class::One);
        assert_eq!(class_from_errors([0.4, 0.5]), Class::Zero);
    }

    #[test]
    fn adapt_epochs_default_to_a_fifth() {
        let cfg = ExplainerConfig::default();
        assert_eq!(cfg.adapt_train_config().epochs, 10);
        assert_eq!(cfg.adapt_train_config().learning_rate, cfg.gae.learning_rate);
    }
}
