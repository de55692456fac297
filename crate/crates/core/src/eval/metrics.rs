use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainer::Explanation;
use crate::graph::{graph_edit_distance, Class, Graph, GraphId};

/// 1 when one of the first `min(j, len)` candidates has a true label
/// different from the query's, 0 otherwise (including an empty list).
pub fn correctness_at(expl: &Explanation, truth: &BTreeMap<GraphId, Class>, j: usize) -> Result<u8> {
    if j == 0 {
        return Err(Error::Config("correctness cut-off must be at least 1".into()));
    }
    let label = |id: &GraphId| truth.get(id).copied().ok_or_else(|| Error::MissingLabel { graph_id: id.clone() });
    let q = label(&expl.query_id)?;
    for r in expl.ranked.iter().take(j) {
        if label(&r.graph_id)? != q {
            return Ok(1);
        }
    }
    Ok(0)
}

/// Structural size `|V| + |E|` used to normalise edit distances.
pub fn structural_size(g: &Graph) -> Result<usize> {
    let size = g.num_nodes() + g.num_edges();
    if size == 0 {
        return Err(Error::DegenerateQuery(g.id().clone()));
    }
    Ok(size)
}

pub fn sparsity_from_ged(query: &Graph, ged: f64) -> Result<f64> {
    Ok(ged / structural_size(query)? as f64)
}

/// `ged(query, candidate) / (|V| + |E|)` of the query.
pub fn sparsity(query: &Graph, candidate: &Graph) -> Result<f64> {
    sparsity_from_ged(query, graph_edit_distance(query, candidate).ged)
}

/// Per-query metric values; GED and sparsity are `None` for an empty list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub correctness_at_1: u8,
    pub correctness_at_k: u8,
    pub ged_at_1: Option<f64>,
    pub ged_at_k: Option<f64>,
    pub sparsity_at_1: Option<f64>,
    pub sparsity_at_k: Option<f64>,
}

/// Metrics of one explanation. The `@k` distances average over the whole
/// returned list; the `@1` ones use its head.
pub fn query_metrics(query: &Graph, expl: &Explanation, truth: &BTreeMap<GraphId, Class>, k: usize) -> Result<QueryMetrics> {
    let size = structural_size(query)? as f64;
    let head = expl.ranked.first().map(|r| r.ged);
    let top: Vec<f64> = expl.ranked.iter().take(k).map(|r| r.ged).collect();
    let mean = (!top.is_empty()).then(|| top.iter().sum::<f64>() / top.len() as f64);
    Ok(QueryMetrics {
        correctness_at_1: correctness_at(expl, truth, 1)?,
        correctness_at_k: correctness_at(expl, truth, k)?,
        ged_at_1: head,
        ged_at_k: mean,
        sparsity_at_1: head.map(|g| g / size),
        sparsity_at_k: mean.map(|g| g / size),
    })
}

/// Arithmetic mean, `NaN` when empty.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation, `NaN` when empty.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::RankedCandidate;

    fn expl(ids: &[&str]) -> Explanation {
        Explanation {
            t: 0,
            query_id: "q".into(),
            inferred_class: Class::Zero,
            ranked: ids
                .iter()
                .map(|id| RankedCandidate { graph_id: (*id).into(), score: 0.5, ged: 2.0, sim: 1.0 / 3.0 })
                .collect(),
        }
    }

    fn truth(valid: &[&str], invalid: &[&str]) -> BTreeMap<GraphId, Class> {
        let mut t = BTreeMap::from([(GraphId::from("q"), Class::Zero)]);
        t.extend(valid.iter().map(|id| (GraphId::from(*id), Class::One)));
        t.extend(invalid.iter().map(|id| (GraphId::from(*id), Class::Zero)));
        t
    }

    #[test]
    fn correctness_definition() {
        let ids: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let invalid: Vec<&str> = refs.iter().copied().filter(|id| *id != "c6").collect();
        let tr = truth(&["c6"], &invalid);
        let e = expl(&refs);
        assert_eq!(correctness_at(&e, &tr, 1).unwrap(), 0);
        assert_eq!(correctness_at(&e, &tr, 6).unwrap(), 0);
        assert_eq!(correctness_at(&e, &tr, 7).unwrap(), 1);
        assert_eq!(correctness_at(&e, &tr, 10).unwrap(), 1);
        assert_eq!(correctness_at(&expl(&[]), &tr, 10).unwrap(), 0);
        assert_eq!(correctness_at(&expl(&["c6"]), &tr, 1).unwrap(), 1);
        assert!(correctness_at(&e, &tr, 0).is_err());
    }

    #[test]
    fn sparsity_normalisation() {
        let g = Graph::from_edges("g", 3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(sparsity(&g, &g).unwrap(), 0.0);
        assert_eq!(sparsity_from_ged(&g, 5.0).unwrap(), 1.0);
        let e = Graph::empty("e", 0);
        assert!(matches!(sparsity(&e, &g), Err(Error::DegenerateQuery(_))));
    }

    #[test]
    fn population_std() {
        assert_eq!(std_dev(&[1.0, 1.0]), 0.0);
        assert!((std_dev(&[0.0, 1.0, 1.0, 0.0, 0.0]) - 0.24f64.sqrt()).abs() < 1e-15);
        assert!(mean(&[]).is_nan());
    }
}
