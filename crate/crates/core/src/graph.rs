//! Dense undirected weighted graphs and the identity-aligned edit distance.
//!
//! Graphs in a temporal dataset share a vertex index space across snapshots,
//! so edit distance aligns vertices by index instead of searching for a
//! matching. Every vertex insertion or deletion costs 1, as does every edge
//! insertion, deletion or weight substitution.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a graph that stays stable across snapshots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GraphId(pub String);

impl GraphId {
    pub fn new(id: impl Into<String>) -> Self {
        GraphId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GraphId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for GraphId {
    fn from(s: &str) -> Self {
        GraphId(s.to_owned())
    }
}

impl From<String> for GraphId {
    fn from(s: String) -> Self {
        GraphId(s)
    }
}

/// Binary class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Class {
    Zero,
    One,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::Zero, Class::One];

    pub fn index(self) -> usize {
        match self {
            Class::Zero => 0,
            Class::One => 1,
        }
    }

    pub fn opposite(self) -> Class {
        match self {
            Class::Zero => Class::One,
            Class::One => Class::Zero,
        }
    }

    pub fn from_bool(positive: bool) -> Class {
        if positive {
            Class::One
        } else {
            Class::Zero
        }
    }
}

impl From<Class> for u8 {
    fn from(c: Class) -> u8 {
        c.index() as u8
    }
}

impl TryFrom<u8> for Class {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Class::Zero),
            1 => Ok(Class::One),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Symmetric, non-negative weighted adjacency with a zero diagonal.
///
/// An edge exists between `i` and `j` iff `weight(i, j) > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    id: GraphId,
    num_nodes: usize,
    weights: Vec<f64>,
}

impl Graph {
    /// Edgeless graph on `num_nodes` vertices.
    pub fn empty(id: impl Into<GraphId>, num_nodes: usize) -> Self {
        Graph {
            id: id.into(),
            num_nodes,
            weights: vec![0.0; num_nodes * num_nodes],
        }
    }

    /// Builds a graph from an undirected edge list.
    ///
    /// A pair listed twice with different weights is reported as an
    /// asymmetric adjacency.
    pub fn from_edges(
        id: impl Into<GraphId>,
        num_nodes: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut g = Graph::empty(id, num_nodes);
        if num_nodes == 0 {
            return Err(g.invalid("graph must have at least one vertex"));
        }
        let mut seen = vec![false; num_nodes * num_nodes];
        for &(u, v, w) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(g.invalid(format!("edge ({u}, {v}) out of range for {num_nodes} vertices")));
            }
            if u == v {
                return Err(g.invalid(format!("self-loop on vertex {u}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(g.invalid(format!("edge ({u}, {v}) has invalid weight {w}")));
            }
            if seen[u * num_nodes + v] && g.weight(u, v) != w {
                return Err(g.invalid(format!(
                    "asymmetric weights: w[{u}][{v}] = {} but w[{v}][{u}] = {w}",
                    g.weight(u, v)
                )));
            }
            seen[u * num_nodes + v] = true;
            seen[v * num_nodes + u] = true;
            g.set_weight(u, v, w);
        }
        Ok(g)
    }

    /// Builds a graph from a row-major dense matrix, validating every invariant.
    pub fn from_dense(id: impl Into<GraphId>, num_nodes: usize, weights: Vec<f64>) -> Result<Self> {
        let g = Graph {
            id: id.into(),
            num_nodes,
            weights,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes;
        if n == 0 {
            return Err(self.invalid("graph must have at least one vertex"));
        }
        if self.weights.len() != n * n {
            return Err(self.invalid(format!("expected {} weights, found {}", n * n, self.weights.len())));
        }
        for i in 0..n {
            if self.weight(i, i) != 0.0 {
                return Err(self.invalid(format!("non-zero diagonal at vertex {i}")));
            }
            for j in 0..n {
                let w = self.weight(i, j);
                if !w.is_finite() || w < 0.0 {
                    return Err(self.invalid(format!("invalid weight {w} at ({i}, {j})")));
                }
                if w != self.weight(j, i) {
                    return Err(self.invalid(format!(
                        "asymmetric weights: w[{i}][{j}] = {w} but w[{j}][{i}] = {}",
                        self.weight(j, i)
                    )));
                }
            }
        }
        Ok(())
    }

    fn invalid(&self, message: impl Into<String>) -> Error {
        Error::Validation {
            graph_id: self.id.clone(),
            message: message.into(),
        }
    }

    pub fn id(&self) -> &GraphId {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<GraphId>) -> Self {
        self.id = id.into();
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.num_nodes + j]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0.0
    }

    /// Sets both `(i, j)` and `(j, i)`. Panics on the diagonal.
    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) {
        assert!(i != j, "self-loops are not allowed");
        assert!(w >= 0.0, "weights must be non-negative");
        let n = self.num_nodes;
        self.weights[i * n + j] = w;
        self.weights[j * n + i] = w;
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.set_weight(i, j, 0.0);
    }

    /// Row-major dense weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Undirected edges as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.num_nodes;
        (0..n).flat_map(move |u| {
            ((u + 1)..n).filter_map(move |v| {
                let w = self.weight(u, v);
                (w > 0.0).then_some((u, v, w))
            })
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        let n = self.num_nodes;
        self.weights[i * n..(i + 1) * n].iter().sum()
    }

    /// Mean over vertices of the summed incident edge weight.
    pub fn mean_weighted_degree(&self) -> f64 {
        (0..self.num_nodes).map(|i| self.weighted_degree(i)).sum::<f64>() / self.num_nodes as f64
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes).filter(move |&j| self.has_edge(i, j))
    }

    /// True when the graph contains at least one cycle. Iterative depth-first
    /// search that ignores the edge leading back to the parent.
    pub fn has_cycle(&self) -> bool {
        let n = self.num_nodes;
        let mut visited = vec![false; n];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if visited[root] {
                continue;
            }
            visited[root] = true;
            stack.push((root, usize::MAX));
            while let Some((u, parent)) = stack.pop() {
                for v in self.neighbors(u) {
                    if v == parent {
                        continue;
                    }
                    if visited[v] {
                        return true;
                    }
                    visited[v] = true;
                    stack.push((v, u));
                }
            }
        }
        false
    }

    pub fn is_connected(&self) -> bool {
        self.component_of(0).iter().all(|&c| c)
    }

    /// Membership mask of the connected component containing `start`.
    pub fn component_of(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Relabels vertices so that vertex `i` of `self` becomes vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let n = self.num_nodes;
        assert_eq!(perm.len(), n);
        let mut out = Graph::empty(self.id.clone(), n);
        for (u, v, w) in self.edges() {
            out.set_weight(perm[u], perm[v], w);
        }
        out
    }

    /// Same weights under a different identifier compare equal.
    pub fn same_structure(&self, other: &Graph) -> bool {
        self.num_nodes == other.num_nodes && self.weights == other.weights
    }
}

/// Components of an edit distance; `ged == node_term + edge_term`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditDistance {
    pub ged: f64,
    pub node_term: usize,
    pub edge_term: f64,
}

/// Identity-aligned graph edit distance.
///
/// Vertices beyond the smaller graph's index range are inserted or deleted at
/// unit cost and every edge incident to them is counted in the edge term.
pub fn graph_edit_distance(a: &Graph, b: &Graph) -> EditDistance {
    let (na, nb) = (a.num_nodes(), b.num_nodes());
    let n = na.max(nb);
    let w = |g: &Graph, i: usize, j: usize| if i < g.num_nodes() && j < g.num_nodes() { g.weight(i, j) } else { 0.0 };
    let mut edits = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if w(a, i, j) != w(b, i, j) {
                edits += 1;
            }
        }
    }
    let node_term = na.abs_diff(nb);
    let edge_term = edits as f64;
    EditDistance {
        ged: node_term as f64 + edge_term,
        node_term,
        edge_term,
    }
}

/// `1 / (1 + ged)`, in `(0, 1]`.
pub fn similarity(a: &Graph, b: &Graph) -> f64 {
    similarity_from_ged(graph_edit_distance(a, b).ged)
}

pub fn similarity_from_ged(ged: f64) -> f64 {
    1.0 / (1.0 + ged)
}
