use nalgebra::DMatrix;

use crate::graph::Graph;

/// Width of [`node_features`].
pub const FEATURE_DIM: usize = 2;

/// Column 0 is constant 1; column 1 is weighted degree over the graph's
/// maximum weighted degree (all zeros for an edgeless graph).
pub fn node_features(g: &Graph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let deg: Vec<f64> = (0..n).map(|i| g.weighted_degree(i)).collect();
    let max = deg.iter().copied().fold(0.0, f64::max);
    DMatrix::from_fn(n, FEATURE_DIM, |i, j| match j {
        0 => 1.0,
        _ if max > 0.0 => deg[i] / max,
        _ => 0.0,
    })
}

/// Symmetrically normalised adjacency with self-loops, `D^-1/2 (A + I) D^-1/2`.
pub fn normalized_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / (g.weighted_degree(i) + 1.0).sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let a = if i == j { 1.0 } else { g.weight(i, j) };
        inv_sqrt[i] * a * inv_sqrt[j]
    })
}
