//! Dynamic Tree-Cycles: acyclic (class 0) and cycle-bearing (class 1)
//! connected graphs that evolve between snapshots.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::dataset::{Member, Snapshot, TemporalDataset};
use crate::error::{Error, Result};
use crate::graph::{Class, Graph, GraphId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeCyclesConfig {
    pub num_graphs: usize,
    pub nodes_per_graph: usize,
    pub num_snapshots: usize,
    /// Fraction of snapshot-0 graphs that carry cycles.
    pub cycle_fraction: f64,
    /// Fraction of edges rewired by a within-class move.
    pub mutation_rate: f64,
    /// Per-graph, per-step probability of moving to the other class.
    pub class_flip_prob: f64,
    /// Cycle-closing edges per cyclic graph are `1 + Poisson(extra_edge_rate)`.
    pub extra_edge_rate: f64,
    pub seed: u64,
}

impl Default for TreeCyclesConfig {
    fn default() -> Self {
        TreeCyclesConfig {
            num_graphs: 100,
            nodes_per_graph: 28,
            num_snapshots: 4,
            cycle_fraction: 0.54,
            mutation_rate: 0.1,
            class_flip_prob: 0.1,
            extra_edge_rate: 0.14,
            seed: 0,
        }
    }
}

impl TreeCyclesConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        if self.num_graphs == 0 {
            return Err(Error::Config("num_graphs must be positive".into()));
        }
        if self.nodes_per_graph < 3 {
            return Err(Error::Config("nodes_per_graph must be at least 3".into()));
        }
        if self.num_snapshots == 0 {
            return Err(Error::Config("num_snapshots must be positive".into()));
        }
        prob("cycle_fraction", self.cycle_fraction)?;
        prob("mutation_rate", self.mutation_rate)?;
        prob("class_flip_prob", self.class_flip_prob)?;
        if !(self.extra_edge_rate >= 0.0 && self.extra_edge_rate.is_finite()) {
            return Err(Error::Config("extra_edge_rate must be non-negative".into()));
        }
        Ok(())
    }
}

/// Uniformly random labelled spanning tree of `K_n` via a Prüfer sequence.
pub fn random_tree<R: Rng + ?Sized>(id: impl Into<GraphId>, n: usize, rng: &mut R) -> Graph {
    let mut g = Graph::empty(id, n);
    if n < 2 {
        return g;
    }
    if n == 2 {
        g.set_weight(0, 1, 1.0);
        return g;
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        g.set_weight(leaf, s, 1.0);
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    g.set_weight(rest[0], rest[1], 1.0);
    g
}

fn non_edges(g: &Graph) -> Vec<(usize, usize)> {
    let n = g.num_nodes();
    (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !g.has_edge(u, v))
        .collect()
}

fn edge_list(g: &Graph) -> Vec<(usize, usize)> {
    g.edges().map(|(u, v, _)| (u, v)).collect()
}

fn add_cycle_edges<R: Rng + ?Sized>(g: &mut Graph, count: usize, rng: &mut R) {
    let mut candidates = non_edges(g);
    candidates.shuffle(rng);
    for &(u, v) in candidates.iter().take(count) {
        g.set_weight(u, v, 1.0);
    }
}

fn extra_edge_count<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> usize {
    if rate <= 0.0 {
        return 1;
    }
    let p = Poisson::new(rate).expect("positive rate");
    1 + p.sample(rng) as usize
}

/// Removes one edge and adds another so that the edge count and connectivity
/// are unchanged, which keeps a connected graph in its class.
fn rewire_once<R: Rng + ?Sized>(g: &mut Graph, rng: &mut R) {
    let edges = edge_list(g);
    let Some(&(u, v)) = edges.choose(rng) else {
        return;
    };
    g.remove_edge(u, v);
    let side = g.component_of(u);
    let replacement = if side[v] {
        // (u, v) lay on a cycle; any other non-edge keeps the graph connected.
        non_edges(g).into_iter().filter(|&e| e != (u, v)).collect::<Vec<_>>()
    } else {
        let n = g.num_nodes();
        let mut cross = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if side[a] != side[b] && (a, b) != (u, v) {
                    cross.push((a, b));
                }
            }
        }
        cross
    };
    let (a, b) = replacement.choose(rng).copied().unwrap_or((u, v));
    g.set_weight(a, b, 1.0);
}

/// Deletes random non-bridge edges until a spanning tree remains.
fn break_cycles<R: Rng + ?Sized>(g: &mut Graph, rng: &mut R) {
    let target = g.num_nodes() - 1;
    while g.num_edges() > target {
        let mut edges = edge_list(g);
        edges.shuffle(rng);
        let removed = edges.into_iter().any(|(u, v)| {
            g.remove_edge(u, v);
            if g.component_of(u)[v] {
                return true;
            }
            g.set_weight(u, v, 1.0);
            false
        });
        if !removed {
            break;
        }
    }
}

/// Moves a connected graph to the other class: a tree gains
/// `1 + Poisson(extra_edge_rate)` edges, a cyclic graph is pruned to a
/// spanning tree.
pub fn flip_class<R: Rng + ?Sized>(g: &mut Graph, extra_edge_rate: f64, rng: &mut R) {
    if g.has_cycle() {
        break_cycles(g, rng);
    } else {
        let k = extra_edge_count(extra_edge_rate, rng);
        add_cycle_edges(g, k, rng);
    }
}

/// Rewires `ceil(rate * |E|)` edges, keeping edge count, connectivity and
/// class.
pub fn mutate_within_class<R: Rng + ?Sized>(g: &mut Graph, rate: f64, rng: &mut R) {
    let moves = (rate * g.num_edges() as f64).ceil() as usize;
    for _ in 0..moves {
        rewire_once(g, rng);
    }
}

pub fn generate_tree_cycles(cfg: &TreeCyclesConfig) -> Result<TemporalDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.nodes_per_graph;
    let width = cfg.num_graphs.saturating_sub(1).to_string().len().max(3);

    let num_cyclic = (cfg.cycle_fraction * cfg.num_graphs as f64).round() as usize;
    let mut cyclic: Vec<bool> = (0..cfg.num_graphs).map(|i| i < num_cyclic).collect();
    cyclic.shuffle(&mut rng);

    let mut graphs: Vec<Graph> = cyclic
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut g = random_tree(format!("g{i:0width$}").as_str(), n, &mut rng);
            if c {
                let k = extra_edge_count(cfg.extra_edge_rate, &mut rng);
                add_cycle_edges(&mut g, k, &mut rng);
            }
            g
        })
        .collect();

    let mut snapshots = Vec::with_capacity(cfg.num_snapshots);
    snapshots.push(labelled(0, &graphs));
    for t in 1..cfg.num_snapshots {
        for g in graphs.iter_mut() {
            if rng.random::<f64>() < cfg.class_flip_prob {
                flip_class(g, cfg.extra_edge_rate, &mut rng);
            } else {
                mutate_within_class(g, cfg.mutation_rate, &mut rng);
            }
        }
        snapshots.push(labelled(t, &graphs));
    }
    TemporalDataset::new(snapshots)
}

/// Labels come from cycle detection on the stored graph, never from the
/// move that produced it.
fn labelled(t: usize, graphs: &[Graph]) -> Snapshot {
    Snapshot {
        t,
        members: graphs
            .iter()
            .map(|g| Member {
                graph: g.clone(),
                label: Class::from_bool(g.has_cycle()),
            })
            .collect(),
    }
}
