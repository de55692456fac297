//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use dygrace::{Graph, GraphId};
use rand::Rng;

pub const MAX_BRUTE_NODES: usize = 5;
const PAIRS: usize = MAX_BRUTE_NODES * (MAX_BRUTE_NODES - 1) / 2;
const WEIGHT_LEVELS: u32 = 3;

fn pair_index(i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    // Row-major over the strict upper triangle of a 5 x 5 matrix.
    i * (2 * MAX_BRUTE_NODES - i - 1) / 2 + (j - i - 1)
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct State {
    n: usize,
    w: [u8; PAIRS],
}

impl State {
    fn encode(&self) -> usize {
        let mut code = self.n;
        for &d in &self.w {
            code = code * WEIGHT_LEVELS as usize + d as usize;
        }
        code
    }

    fn from_graph(g: &Graph) -> State {
        let n = g.num_nodes();
        assert!(n <= MAX_BRUTE_NODES);
        let mut w = [0u8; PAIRS];
        for i in 0..n {
            for j in (i + 1)..n {
                let x = g.weight(i, j);
                w[pair_index(i, j)] = if x == 0.0 {
                    0
                } else if x == 1.0 {
                    1
                } else if x == 2.0 {
                    2
                } else {
                    panic!("brute force supports weights 0, 1, 2 only")
                };
            }
        }
        State { n, w }
    }
}

/// Length of the shortest sequence of unit-cost edits turning `a` into `b`.
/// Edits: set one pair among existing vertices to any other weight level
/// (insertion, deletion or substitution), append an isolated vertex, or
/// drop the last vertex once it is isolated.
pub fn brute_force_ged(a: &Graph, b: &Graph) -> usize {
    let start = State::from_graph(a);
    let goal = State::from_graph(b).encode();
    let size = (MAX_BRUTE_NODES + 1) * (WEIGHT_LEVELS as usize).pow(PAIRS as u32);
    let mut dist = vec![u8::MAX; size];
    dist[start.encode()] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let d = dist[s.encode()];
        if s.encode() == goal {
            return d as usize;
        }
        let mut push = |t: State, queue: &mut VecDeque<State>| {
            let c = t.encode();
            if dist[c] == u8::MAX {
                dist[c] = d + 1;
                queue.push_back(t);
            }
        };
        for i in 0..s.n {
            for j in (i + 1)..s.n {
                let p = pair_index(i, j);
                for level in 0..WEIGHT_LEVELS as u8 {
                    if level != s.w[p] {
                        let mut t = s;
                        t.w[p] = level;
                        push(t, &mut queue);
                    }
                }
            }
        }
        if s.n < MAX_BRUTE_NODES {
            push(State { n: s.n + 1, w: s.w }, &mut queue);
        }
        if s.n > 0 && (0..s.n - 1).all(|i| s.w[pair_index(i, s.n - 1)] == 0) {
            push(State { n: s.n - 1, w: s.w }, &mut queue);
        }
    }
    unreachable!("every state is reachable")
}

/// Random graph with edge probability `p` and weights drawn from `weights`.
pub fn random_graph<R: Rng>(id: &str, n: usize, p: f64, weights: &[f64], rng: &mut R) -> Graph {
    let mut g = Graph::empty(GraphId::from(id), n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                let w = weights[rng.random_range(0..weights.len())];
                g.set_weight(i, j, w);
            }
        }
    }
    g
}

/// `sup_x |F_a(x) - F_b(x)|` evaluated at every sample point.
pub fn brute_force_ks(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
        .fold(0.0, f64::max)
}

/// `2 * sum_{k=1}^{100} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_series(lambda: f64) -> f64 {
    2.0 * (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum::<f64>()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| (0..inner).map(|k| row[k] * b[k][c]).sum())
                .collect()
        })
        .collect()
}

fn to_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

/// Straight-line GCN forward pass `Â ReLU(Â X W1) W2` on nested vectors.
pub fn reference_encode(g: &Graph, w1: &nalgebra::DMatrix<f64>, w2: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g.weight(i, j)).sum()).collect();
    let max_deg = deg.iter().cloned().fold(0.0, f64::max);
    let x: Vec<Vec<f64>> = deg
        .iter()
        .map(|&d| vec![1.0, if max_deg > 0.0 { d / max_deg } else { 0.0 }])
        .collect();
    let a_tilde: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| g.weight(i, j) + if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let d: Vec<f64> = a_tilde.iter().map(|r| r.iter().sum::<f64>()).collect();
    let a_hat: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a_tilde[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect();
    let h = matmul(&matmul(&a_hat, &x), &to_rows(w1));
    let r: Vec<Vec<f64>> = h.iter().map(|row| row.iter().map(|v| v.max(0.0)).collect()).collect();
    matmul(&matmul(&a_hat, &r), &to_rows(w2))
}

/// Mean over ordered pairs `i != j` of `-[t log p + (1 - t) log(1 - p)]`.
pub fn reference_bce(z: &[Vec<f64>], g: &Graph) -> f64 {
    let n = g.num_nodes();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let s: f64 = z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-s).exp());
            let t = if g.weight(i, j) > 0.0 { 1.0 } else { 0.0 };
            total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
            count += 1;
        }
    }
    total / count as f64
}
