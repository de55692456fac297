//! Synthetic co-authorship ego-networks with per-snapshot percentile labels.
//!
//! Vertex 0 is the ego and is linked to every alter; alter-alter links appear
//! with an ego-specific density and churn between active snapshots. Edge
//! weights count collaborations, `1 + Poisson(rate)`, where the rate follows a
//! per-ego log-normal random walk.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, Member, Snapshot, TemporalDataset};
use crate::error::{Error, Result};
use crate::graph::{Class, Graph};
use crate::oracle::{activity, snapshot_threshold};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoauthorConfig {
    pub num_egos: usize,
    pub nodes_per_ego: usize,
    pub num_snapshots: usize,
    /// Mean and spread of the per-ego alter-alter link density.
    pub alter_density_mean: f64,
    pub alter_density_sd: f64,
    /// Probability that an alter-alter link is dropped at an active step;
    /// additions are balanced so the expected density is stationary.
    pub edge_churn: f64,
    /// Base Poisson rate of extra collaborations per edge.
    pub weight_rate: f64,
    /// Log-scale spread of per-ego activity at t = 0.
    pub activity_sigma: f64,
    /// Log-scale step of the activity random walk.
    pub activity_walk_sigma: f64,
    /// Probability an ego has no activity at a step and keeps its network.
    pub inactivity_prob: f64,
    pub percentile: f64,
    pub seed: u64,
}

impl Default for CoauthorConfig {
    fn default() -> Self {
        CoauthorConfig {
            num_egos: 36,
            nodes_per_ego: 13,
            num_snapshots: 11,
            alter_density_mean: 0.443,
            alter_density_sd: 0.08,
            edge_churn: 0.1,
            weight_rate: 1.0,
            activity_sigma: 0.5,
            activity_walk_sigma: 0.25,
            inactivity_prob: 0.1,
            percentile: 75.0,
            seed: 0,
        }
    }
}

impl CoauthorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_egos == 0 {
            return Err(Error::Config("num_egos must be positive".into()));
        }
        if self.nodes_per_ego < 2 {
            return Err(Error::Config("nodes_per_ego must be at least 2".into()));
        }
        if self.num_snapshots == 0 {
            return Err(Error::Config("num_snapshots must be positive".into()));
        }
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(Error::Config(format!("percentile must be in (0, 100), got {}", self.percentile)));
        }
        for (name, p) in [
            ("alter_density_mean", self.alter_density_mean),
            ("edge_churn", self.edge_churn),
            ("inactivity_prob", self.inactivity_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        for (name, v) in [
            ("alter_density_sd", self.alter_density_sd),
            ("weight_rate", self.weight_rate),
            ("activity_sigma", self.activity_sigma),
            ("activity_walk_sigma", self.activity_walk_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

struct Ego {
    graph: Graph,
    density: f64,
    activity: f64,
}

fn draw_weight<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return 1.0;
    }
    1.0 + Poisson::new(rate).expect("positive rate").sample(rng).floor()
}

fn reweight<R: Rng + ?Sized>(ego: &mut Ego, base_rate: f64, rng: &mut R) {
    let rate = base_rate * ego.activity;
    let edges: Vec<(usize, usize)> = ego.graph.edges().map(|(u, v, _)| (u, v)).collect();
    for (u, v) in edges {
        let w = draw_weight(rate, rng);
        ego.graph.set_weight(u, v, w);
    }
}

pub fn generate_coauthor(cfg: &CoauthorConfig) -> Result<TemporalDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.nodes_per_ego;
    let width = cfg.num_egos.saturating_sub(1).to_string().len().max(3);
    let density_dist = Normal::new(cfg.alter_density_mean, cfg.alter_density_sd).expect("finite sd");
    let activity_dist = LogNormal::new(0.0, cfg.activity_sigma).expect("finite sigma");
    let walk = Normal::new(0.0, cfg.activity_walk_sigma).expect("finite sigma");

    let mut egos: Vec<Ego> = (0..cfg.num_egos)
        .map(|i| {
            let density = density_dist.sample(&mut rng).clamp(0.02, 0.98);
            let mut graph = Graph::empty(format!("ego{i:0width$}").as_str(), n);
            for a in 1..n {
                graph.set_weight(0, a, 1.0);
            }
            for a in 1..n {
                for b in (a + 1)..n {
                    if rng.random::<f64>() < density {
                        graph.set_weight(a, b, 1.0);
                    }
                }
            }
            let mut ego = Ego {
                graph,
                density,
                activity: activity_dist.sample(&mut rng),
            };
            reweight(&mut ego, cfg.weight_rate, &mut rng);
            ego
        })
        .collect();

    let mut snapshots = vec![labelled(0, &egos, cfg.percentile)];
    for t in 1..cfg.num_snapshots {
        for ego in egos.iter_mut() {
            ego.activity *= walk.sample(&mut rng).exp();
            if rng.random::<f64>() < cfg.inactivity_prob {
                continue;
            }
            let add_prob = (cfg.edge_churn * ego.density / (1.0 - ego.density)).min(1.0);
            for a in 1..n {
                for b in (a + 1)..n {
                    let u: f64 = rng.random();
                    if ego.graph.has_edge(a, b) {
                        if u < cfg.edge_churn {
                            ego.graph.remove_edge(a, b);
                        }
                    } else if u < add_prob {
                        ego.graph.set_weight(a, b, 1.0);
                    }
                }
            }
            reweight(ego, cfg.weight_rate, &mut rng);
        }
        snapshots.push(labelled(t, &egos, cfg.percentile));
    }
    TemporalDataset::new(snapshots)
}

fn labelled(t: usize, egos: &[Ego], pct: f64) -> Snapshot {
    let mut s = Snapshot {
        t,
        members: egos
            .iter()
            .map(|e| Member {
                graph: e.graph.clone(),
                label: Class::Zero,
            })
            .collect(),
    };
    relabel_snapshot(&mut s, pct);
    s
}

fn relabel_snapshot(s: &mut Snapshot, pct: f64) {
    let th = snapshot_threshold(s, pct);
    for m in s.members.iter_mut() {
        m.label = Class::from_bool(activity(&m.graph) >= th);
    }
}

/// Overwrites every label with the per-snapshot percentile rule; ties at the
/// threshold are labelled 1.
pub fn relabel_by_percentile(d: &mut TemporalDataset, pct: f64) {
    for s in d.snapshots.iter_mut() {
        if !s.is_empty() {
            relabel_snapshot(s, pct);
        }
    }
}

/// Loads externally prepared ego-networks and recomputes their labels.
pub fn load_coauthor_file(path: impl AsRef<Path>, cfg: &CoauthorConfig) -> Result<TemporalDataset> {
    let mut d = load_dataset(path)?;
    relabel_by_percentile(&mut d, cfg.percentile);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn egos_are_stars_plus_alter_links() {
        let d = generate_coauthor(&CoauthorConfig::default()).unwrap();
        for s in &d.snapshots {
            for g in s.graphs() {
                assert!((1..13).all(|a| g.has_edge(0, a)));
                assert!(g.edges().all(|(_, _, w)| w >= 1.0 && w.fract() == 0.0));
            }
        }
    }

    #[test]
    fn rejects_percentile_out_of_range() {
        for pct in [0.0, 100.0, -3.0] {
            let cfg = CoauthorConfig {
                percentile: pct,
                ..Default::default()
            };
            assert!(generate_coauthor(&cfg).is_err());
        }
    }
}
