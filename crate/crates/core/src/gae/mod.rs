//! Graph autoencoder: two-layer GCN encoder, inner-product decoder and a
//! mean binary cross-entropy reconstruction loss, trained with Adam on
//! hand-derived gradients.

mod adam;
mod propagation;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Class, Graph};

pub use adam::{AdamParams, AdamState};
pub use propagation::{node_features, normalized_adjacency, FEATURE_DIM};

/// Output width of both convolutions.
pub const HIDDEN_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaeTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds Glorot initialisation.
    pub seed: u64,
}

impl Default for GaeTrainConfig {
    fn default() -> Self {
        GaeTrainConfig {
            epochs: 50,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl GaeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Loss trajectory of one [`GaeModel::train`] call.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    /// Mean batch loss before each step.
    pub epoch_losses: Vec<f64>,
    /// Mean batch loss after the last step.
    pub final_loss: f64,
}

impl TrainSummary {
    pub fn initial_loss(&self) -> f64 {
        self.epoch_losses.first().copied().unwrap_or(self.final_loss)
    }
}

/// Gradients of the reconstruction loss with respect to both weight matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
}

impl Gradients {
    fn zeros() -> Self {
        Gradients {
            w1: DMatrix::zeros(FEATURE_DIM, HIDDEN_DIM),
            w2: DMatrix::zeros(HIDDEN_DIM, HIDDEN_DIM),
        }
    }

    fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaeModel {
    pub class_tag: Class,
    #[serde(with = "row_major")]
    w1: DMatrix<f64>,
    #[serde(with = "row_major")]
    w2: DMatrix<f64>,
    adam_w1: AdamState,
    adam_w2: AdamState,
}

fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..limit))
}

struct Forward {
    ax: DMatrix<f64>,
    h1: DMatrix<f64>,
    ar: DMatrix<f64>,
    a_hat: DMatrix<f64>,
    z: DMatrix<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Mean BCE between `sigmoid(z_i . z_j)` and the binarised adjacency over all
/// ordered off-diagonal pairs, and its gradient with respect to the logits.
fn decode_loss(z: &DMatrix<f64>, g: &Graph, want_grad: bool) -> (f64, Option<DMatrix<f64>>) {
    let n = g.num_nodes();
    if n < 2 {
        return (0.0, want_grad.then(|| DMatrix::zeros(n, n)));
    }
    let pairs = (n * (n - 1)) as f64;
    let logits = z * z.transpose();
    let mut loss = 0.0;
    let mut grad = want_grad.then(|| DMatrix::zeros(n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let s = logits[(i, j)];
            let target = if g.has_edge(i, j) { 1.0 } else { 0.0 };
            loss += softplus(s) - target * s;
            if let Some(gr) = grad.as_mut() {
                gr[(i, j)] = (sigmoid(s) - target) / pairs;
            }
        }
    }
    (loss / pairs, grad)
}

/// Reconstruction error of a graph from a given embedding.
pub fn reconstruction_error_from_embedding(z: &DMatrix<f64>, g: &Graph) -> f64 {
    decode_loss(z, g, false).0
}

impl GaeModel {
    /// Glorot-uniform initialisation from `seed`.
    pub fn new(class_tag: Class, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = glorot(FEATURE_DIM, HIDDEN_DIM, &mut rng);
        let w2 = glorot(HIDDEN_DIM, HIDDEN_DIM, &mut rng);
        GaeModel::from_weights(class_tag, w1, w2)
    }

    pub fn zeros(class_tag: Class) -> Self {
        GaeModel::from_weights(
            class_tag,
            DMatrix::zeros(FEATURE_DIM, HIDDEN_DIM),
            DMatrix::zeros(HIDDEN_DIM, HIDDEN_DIM),
        )
    }

    pub fn from_weights(class_tag: Class, w1: DMatrix<f64>, w2: DMatrix<f64>) -> Self {
        assert_eq!(w1.shape(), (FEATURE_DIM, HIDDEN_DIM));
        assert_eq!(w2.shape(), (HIDDEN_DIM, HIDDEN_DIM));
        GaeModel {
            class_tag,
            adam_w1: AdamState::new(FEATURE_DIM, HIDDEN_DIM),
            adam_w2: AdamState::new(HIDDEN_DIM, HIDDEN_DIM),
            w1,
            w2,
        }
    }

    pub fn w1(&self) -> &DMatrix<f64> {
        &self.w1
    }

    pub fn w2(&self) -> &DMatrix<f64> {
        &self.w2
    }

    pub fn adam_states(&self) -> (&AdamState, &AdamState) {
        (&self.adam_w1, &self.adam_w2)
    }

    /// Validates shapes after deserialisation.
    pub fn check_shapes(&self) -> Result<()> {
        let ok = self.w1.shape() == (FEATURE_DIM, HIDDEN_DIM)
            && self.w2.shape() == (HIDDEN_DIM, HIDDEN_DIM)
            && self.adam_w1.shape() == self.w1.shape()
            && self.adam_w2.shape() == self.w2.shape()
            && self.adam_w1.v.shape() == self.w1.shape()
            && self.adam_w2.v.shape() == self.w2.shape();
        if ok {
            Ok(())
        } else {
            Err(Error::Config("autoencoder checkpoint has inconsistent shapes".into()))
        }
    }

    fn forward(&self, g: &Graph) -> Forward {
        let a_hat = normalized_adjacency(g);
        let ax = &a_hat * node_features(g);
        let h1 = &ax * &self.w1;
        let r = h1.map(|v| v.max(0.0));
        let ar = &a_hat * r;
        let z = &ar * &self.w2;
        Forward { ax, h1, ar, a_hat, z }
    }

    /// Node embeddings `Â · ReLU(Â X W1) · W2`, one row per vertex.
    pub fn encode(&self, g: &Graph) -> DMatrix<f64> {
        self.forward(g).z
    }

    pub fn reconstruction_error(&self, g: &Graph) -> f64 {
        reconstruction_error_from_embedding(&self.encode(g), g)
    }

    /// Reconstruction loss of one graph and its exact gradient.
    pub fn loss_and_gradients(&self, g: &Graph) -> (f64, Gradients) {
        let fw = self.forward(g);
        let (loss, dlogits) = decode_loss(&fw.z, g, true);
        let dlogits = dlogits.expect("gradient requested");
        // logits = Z Z^T with symmetric upstream gradient.
        let dz = (&dlogits + dlogits.transpose()) * &fw.z;
        let gw2 = fw.ar.transpose() * &dz;
        let dr = &fw.a_hat * (&dz * self.w2.transpose());
        let dh1 = dr.zip_map(&fw.h1, |d, h| if h > 0.0 { d } else { 0.0 });
        let gw1 = fw.ax.transpose() * dh1;
        (loss, Gradients { w1: gw1, w2: gw2 })
    }

    /// Mean loss and gradient over a batch. The reduction runs in input order.
    pub fn batch_loss_and_gradients(&self, graphs: &[&Graph]) -> (f64, Gradients) {
        let parts: Vec<(f64, Gradients)> = graphs.par_iter().map(|g| self.loss_and_gradients(g)).collect();
        let mut total = Gradients::zeros();
        let mut loss = 0.0;
        for (l, gr) in parts {
            loss += l;
            total.w1 += gr.w1;
            total.w2 += gr.w2;
        }
        let scale = 1.0 / graphs.len().max(1) as f64;
        total.w1 *= scale;
        total.w2 *= scale;
        (loss * scale, total)
    }

    pub fn mean_reconstruction_error(&self, graphs: &[&Graph]) -> f64 {
        let errs: Vec<f64> = graphs.par_iter().map(|g| self.reconstruction_error(g)).collect();
        errs.iter().sum::<f64>() / graphs.len().max(1) as f64
    }

    /// Full-batch training: one Adam step per epoch on the mean loss.
    ///
    /// `Maximize` ascends the loss with each gradient matrix clipped to unit
    /// L2 norm.
    pub fn train(&mut self, graphs: &[&Graph], cfg: &GaeTrainConfig, direction: Direction) -> Result<TrainSummary> {
        cfg.validate()?;
        if graphs.is_empty() {
            return Err(Error::Config("cannot train on an empty batch".into()));
        }
        let hp = cfg.adam();
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            let (loss, mut grads) = self.batch_loss_and_gradients(graphs);
            let params_ok = self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite());
            if !params_ok || !loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("autoencoder training, epoch {epoch}"),
                });
            }
            epoch_losses.push(loss);
            if direction == Direction::Maximize {
                for m in [&mut grads.w1, &mut grads.w2] {
                    let norm = m.norm();
                    if norm > 1.0 {
                        *m /= norm;
                    }
                    m.neg_mut();
                }
            }
            self.adam_w1.update(&mut self.w1, &grads.w1, &hp);
            self.adam_w2.update(&mut self.w2, &grads.w2, &hp);
        }
        let final_loss = self.mean_reconstruction_error(graphs);
        if !final_loss.is_finite() {
            return Err(Error::NonFinite {
                context: format!("autoencoder training, epoch {}", cfg.epochs),
            });
        }
        Ok(TrainSummary { epoch_losses, final_loss })
    }

    fn with_param(&self, which: usize, idx: (usize, usize), value: f64) -> GaeModel {
        let mut m = self.clone();
        match which {
            0 => m.w1[idx] = value,
            _ => m.w2[idx] = value,
        }
        m
    }
}

/// Central-difference step used by [`gradient_check`].
pub const FD_EPSILON: f64 = 1e-5;

/// Largest relative disagreement between analytic and central finite
/// difference gradients over every parameter.
pub fn gradient_check(m: &GaeModel, g: &Graph) -> f64 {
    gradient_check_with(m, g, |m, g| m.loss_and_gradients(g).1)
}

/// [`gradient_check`] against an arbitrary gradient routine.
pub fn gradient_check_with<F>(m: &GaeModel, g: &Graph, analytic: F) -> f64
where
    F: Fn(&GaeModel, &Graph) -> Gradients,
{
    let grads = analytic(m, g);
    let mut worst: f64 = 0.0;
    for (which, (params, an)) in [(&m.w1, &grads.w1), (&m.w2, &grads.w2)].into_iter().enumerate() {
        for r in 0..params.nrows() {
            for c in 0..params.ncols() {
                let p = params[(r, c)];
                let plus = m.with_param(which, (r, c), p + FD_EPSILON).reconstruction_error(g);
                let minus = m.with_param(which, (r, c), p - FD_EPSILON).reconstruction_error(g);
                let fd = (plus - minus) / (2.0 * FD_EPSILON);
                let a = an[(r, c)];
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    worst
}

/// Serde adapter storing a matrix as `{rows, cols, data}` with row-major data.
pub(crate) mod row_major {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect();
        Repr {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.data.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix data has {} entries, expected {}x{}",
                r.data.len(),
                r.rows,
                r.cols
            )));
        }
        Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data))
    }
}
