//! Pair scorer: a logistic model over (factual error, counterfactual error,
//! similarity) that estimates how likely a candidate is a valid
//! counterfactual for a query, and the top-k ranking built on it.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gae::GaeModel;
use crate::graph::{graph_edit_distance, similarity, similarity_from_ged, Class, Graph, GraphId};
use crate::logistic::{fit_logistic, sigmoid, LogisticOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFeatures {
    /// Candidate's reconstruction error under the query-class autoencoder.
    pub h_factual: f64,
    /// Candidate's reconstruction error under the opposite-class autoencoder.
    pub h_counterfactual: f64,
    pub sim: f64,
}

impl PairFeatures {
    fn as_array(&self) -> [f64; 3] {
        [self.h_factual, self.h_counterfactual, self.sim]
    }
}

pub fn extract_features(query: &Graph, candidate: &Graph, f0: &GaeModel, f1: &GaeModel, query_class: Class) -> PairFeatures {
    let (fact, cf) = match query_class {
        Class::Zero => (f0, f1),
        Class::One => (f1, f0),
    };
    PairFeatures {
        h_factual: fact.reconstruction_error(candidate),
        h_counterfactual: cf.reconstruction_error(candidate),
        sim: similarity(query, candidate),
    }
}

/// Reconstruction errors of each graph under both autoencoders, indexed by
/// [`Class::index`].
#[derive(Clone, Debug, Default)]
pub struct ErrorTable {
    errors: BTreeMap<GraphId, [f64; 2]>,
}

impl ErrorTable {
    pub fn compute<'a>(graphs: impl IntoIterator<Item = &'a Graph>, f0: &GaeModel, f1: &GaeModel) -> Self {
        let graphs: Vec<&Graph> = graphs.into_iter().collect();
        let rows: Vec<(GraphId, [f64; 2])> = graphs
            .par_iter()
            .map(|g| (g.id().clone(), [f0.reconstruction_error(g), f1.reconstruction_error(g)]))
            .collect();
        ErrorTable {
            errors: rows.into_iter().collect(),
        }
    }

    pub fn get(&self, id: &GraphId) -> Option<[f64; 2]> {
        self.errors.get(id).copied()
    }

    fn features(&self, query: &Graph, candidate: &Graph, query_class: Class) -> (PairFeatures, f64) {
        let h = self.errors[candidate.id()];
        let ged = graph_edit_distance(query, candidate).ged;
        (
            PairFeatures {
                h_factual: h[query_class.index()],
                h_counterfactual: h[query_class.opposite().index()],
                sim: similarity_from_ged(ged),
            },
            ged,
        )
    }
}

/// One supervised example for the scorer.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPair {
    pub query_id: GraphId,
    pub candidate_id: GraphId,
    pub features: PairFeatures,
    /// True when the two graphs belong to different classes.
    pub label: bool,
}

/// One example per ordered `(query in train, candidate in all)` pair with
/// distinct ids, sorted by `(query_id, candidate_id)`.
pub fn build_pair_training_set(
    train: &[&Graph],
    all: &[&Graph],
    labels: &BTreeMap<GraphId, Class>,
    errors: &ErrorTable,
) -> Result<Vec<LabeledPair>> {
    let label_of = |g: &Graph| {
        labels
            .get(g.id())
            .copied()
            .ok_or_else(|| Error::MissingLabel { graph_id: g.id().clone() })
    };
    let mut train: Vec<&Graph> = train.to_vec();
    train.sort_by(|a, b| a.id().cmp(b.id()));
    let mut all: Vec<&Graph> = all.to_vec();
    all.sort_by(|a, b| a.id().cmp(b.id()));
    let all_labels: Vec<Class> = all.iter().map(|g| label_of(g)).collect::<Result<_>>()?;
    for g in &all {
        if errors.get(g.id()).is_none() {
            return Err(Error::Dataset(format!("no reconstruction errors for graph {}", g.id())));
        }
    }

    let per_query: Vec<Result<Vec<LabeledPair>>> = train
        .par_iter()
        .map(|q| {
            let qc = label_of(q)?;
            Ok(all
                .iter()
                .zip(&all_labels)
                .filter(|(c, _)| c.id() != q.id())
                .map(|(c, &cc)| LabeledPair {
                    query_id: q.id().clone(),
                    candidate_id: c.id().clone(),
                    features: errors.features(q, c, qc).0,
                    label: cc != qc,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for part in per_query {
        out.extend(part?);
    }
    Ok(out)
}

/// Logistic model `σ(α·z_f − β·z_cf + γ·z_sim + bias)` on features
/// standardised with statistics frozen at fit time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScorer {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub bias: f64,
    pub means: [f64; 3],
    pub stds: [f64; 3],
    pub l2_lambda: f64,
    fitted: bool,
}

impl PairScorer {
    pub fn new(l2_lambda: f64) -> Self {
        PairScorer {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            bias: 0.0,
            means: [0.0; 3],
            stds: [1.0; 3],
            l2_lambda,
            fitted: false,
        }
    }

    /// A ready-to-score model with explicit parameters.
    pub fn from_parameters(alpha: f64, beta: f64, gamma: f64, bias: f64, means: [f64; 3], stds: [f64; 3]) -> Self {
        PairScorer {
            alpha,
            beta,
            gamma,
            bias,
            means,
            stds,
            l2_lambda: 0.0,
            fitted: true,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    /// Linear coefficients on the standardised features, in feature order.
    pub fn coefficients(&self) -> [f64; 3] {
        [self.alpha, -self.beta, self.gamma]
    }

    fn standardize(&self, f: &PairFeatures) -> [f64; 3] {
        let raw = f.as_array();
        std::array::from_fn(|i| (raw[i] - self.means[i]) / self.stds[i])
    }

    /// Fits from zero parameters, or from the current ones when `warm_start`
    /// is set and the scorer was fitted before.
    pub fn fit(&mut self, pairs: &[LabeledPair], warm_start: bool) -> Result<()> {
        if pairs.is_empty() {
            return Err(Error::SingleLabel);
        }
        let n = pairs.len() as f64;
        let mut means = [0.0; 3];
        for p in pairs {
            for (m, v) in means.iter_mut().zip(p.features.as_array()) {
                *m += v / n;
            }
        }
        let mut stds = [0.0; 3];
        for p in pairs {
            for ((s, m), v) in stds.iter_mut().zip(&means).zip(p.features.as_array()) {
                *s += (v - m).powi(2) / n;
            }
        }
        for (index, s) in stds.iter_mut().enumerate() {
            *s = s.sqrt();
            if s.is_nan() || *s <= 1e-12 {
                return Err(Error::DegenerateFeature { index });
            }
        }
        let mut next = PairScorer { means, stds, ..self.clone() };
        let x: Vec<Vec<f64>> = pairs.iter().map(|p| next.standardize(&p.features).to_vec()).collect();
        let y: Vec<bool> = pairs.iter().map(|p| p.label).collect();
        let opts = LogisticOptions {
            l2_lambda: self.l2_lambda,
            ..Default::default()
        };
        let init_w = self.coefficients();
        let init = (warm_start && self.fitted).then_some((&init_w[..], self.bias));
        let fit = fit_logistic(&x, &y, &opts, init)?;
        next.alpha = fit.weights[0];
        next.beta = -fit.weights[1];
        next.gamma = fit.weights[2];
        next.bias = fit.bias;
        next.fitted = true;
        *self = next;
        Ok(())
    }

    pub fn linear(&self, f: &PairFeatures) -> Result<f64> {
        if !self.fitted {
            return Err(Error::NotFitted);
        }
        let z = self.standardize(f);
        Ok(self.coefficients().iter().zip(z).map(|(c, v)| c * v).sum::<f64>() + self.bias)
    }

    pub fn score(&self, f: &PairFeatures) -> Result<f64> {
        Ok(sigmoid(self.linear(f)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub graph_id: GraphId,
    pub score: f64,
    pub ged: f64,
    pub sim: f64,
}

/// Score descending, then similarity descending, then graph id ascending.
fn rank_order(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.sim.total_cmp(&a.sim))
        .then_with(|| a.graph_id.cmp(&b.graph_id))
}

/// Ranks `candidates` for `query` using precomputed errors. The query's own
/// id is skipped; at most `k` entries are returned.
pub fn rank_with_errors(
    scorer: &PairScorer,
    query: &Graph,
    candidates: &[&Graph],
    errors: &ErrorTable,
    query_class: Class,
    k: usize,
) -> Result<Vec<RankedCandidate>> {
    let mut ranked = candidates
        .iter()
        .filter(|c| c.id() != query.id())
        .map(|c| {
            let (f, ged) = errors.features(query, c, query_class);
            Ok(RankedCandidate {
                graph_id: c.id().clone(),
                score: scorer.score(&f)?,
                ged,
                sim: f.sim,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(rank_order);
    ranked.truncate(k);
    Ok(ranked)
}

pub fn rank_candidates(
    scorer: &PairScorer,
    query: &Graph,
    candidates: &[&Graph],
    f0: &GaeModel,
    f1: &GaeModel,
    query_class: Class,
    k: usize,
) -> Result<Vec<RankedCandidate>> {
    let errors = ErrorTable::compute(candidates.iter().copied(), f0, f1);
    rank_with_errors(scorer, query, candidates, &errors, query_class, k)
}
