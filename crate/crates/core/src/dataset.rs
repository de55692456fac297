//! Snapshots, temporal datasets, and the JSON-lines dataset file format.
//!
//! One record per line:
//! `{"snapshot":0,"graph_id":"g0","num_nodes":3,"edges":[[0,1,1.0]],"label":1}`
//! with each undirected edge listed once and `u < v`.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Class, Graph, GraphId};

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub graph: Graph,
    pub label: Class,
}

/// The population of graphs observed at one time index.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: usize,
    pub members: Vec<Member>,
}

impl Snapshot {
    pub fn new(t: usize, members: Vec<Member>) -> Result<Self> {
        let s = Snapshot { t, members };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for m in &self.members {
            m.graph.validate()?;
            if !seen.insert(m.graph.id()) {
                return Err(Error::Dataset(format!(
                    "graph id {} appears twice in snapshot {}",
                    m.graph.id(),
                    self.t
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn graphs(&self) -> impl Iterator<Item = &Graph> {
        self.members.iter().map(|m| &m.graph)
    }

    pub fn get(&self, id: &GraphId) -> Option<&Member> {
        self.members.iter().find(|m| m.graph.id() == id)
    }

    pub fn ids(&self) -> Vec<GraphId> {
        self.members.iter().map(|m| m.graph.id().clone()).collect()
    }

    pub fn labels(&self) -> BTreeMap<GraphId, Class> {
        self.members.iter().map(|m| (m.graph.id().clone(), m.label)).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0, 0];
        for m in &self.members {
            c[m.label.index()] += 1;
        }
        c
    }
}

/// Snapshots `0..=T` of one evolving population.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalDataset {
    pub snapshots: Vec<Snapshot>,
}

impl TemporalDataset {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        let d = TemporalDataset { snapshots };
        d.validate()?;
        Ok(d)
    }

    /// Checks time contiguity, per-snapshot id uniqueness and that every id
    /// seen at `t > 0` already existed at `t - 1`.
    pub fn validate(&self) -> Result<()> {
        if self.snapshots.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, s) in self.snapshots.iter().enumerate() {
            if s.t != i {
                return Err(Error::Dataset(format!("snapshot at position {i} has time index {}", s.t)));
            }
            s.validate()?;
        }
        for w in self.snapshots.windows(2) {
            let prev: HashSet<&GraphId> = w[0].graphs().map(Graph::id).collect();
            if let Some(g) = w[1].graphs().find(|g| !prev.contains(g.id())) {
                return Err(Error::Dataset(format!(
                    "graph id {} appears at t = {} but not at t = {}",
                    g.id(),
                    w[1].t,
                    w[0].t
                )));
            }
        }
        Ok(())
    }

    /// Maximum time index `T`.
    pub fn horizon(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn snapshot(&self, t: usize) -> Option<&Snapshot> {
        self.snapshots.get(t)
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    snapshot: usize,
    graph_id: String,
    num_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    label: u8,
}

pub fn save_dataset(d: &TemporalDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(d, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset<W: Write>(d: &TemporalDataset, w: &mut W) -> Result<()> {
    for s in &d.snapshots {
        for m in &s.members {
            let rec = Record {
                snapshot: s.t,
                graph_id: m.graph.id().0.clone(),
                num_nodes: m.graph.num_nodes(),
                edges: m.graph.edges().collect(),
                label: m.label.into(),
            };
            serde_json::to_writer(&mut *w, &rec)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<TemporalDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Parses JSON-lines records. Blank lines are skipped; line numbers in parse
/// errors are 1-based.
pub fn read_dataset<R: BufRead>(r: R) -> Result<TemporalDataset> {
    let mut by_t: BTreeMap<usize, Vec<Member>> = BTreeMap::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let label = Class::try_from(rec.label).map_err(|message| Error::Parse { line: idx + 1, message })?;
        let graph = Graph::from_edges(GraphId(rec.graph_id), rec.num_nodes, &rec.edges)?;
        by_t.entry(rec.snapshot).or_default().push(Member { graph, label });
    }
    if by_t.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let snapshots = by_t.into_iter().map(|(t, members)| Snapshot { t, members }).collect();
    TemporalDataset::new(snapshots)
}
