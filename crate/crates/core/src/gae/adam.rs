use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::row_major;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamParams {
    pub fn with_lr(learning_rate: f64) -> Self {
        AdamParams {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    #[serde(with = "row_major")]
    pub m: DMatrix<f64>,
    #[serde(with = "row_major")]
    pub v: DMatrix<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        AdamState {
            m: DMatrix::zeros(rows, cols),
            v: DMatrix::zeros(rows, cols),
            step: 0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.m.shape()
    }

    /// One bias-corrected descent step: `param -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn update(&mut self, param: &mut DMatrix<f64>, grad: &DMatrix<f64>, hp: &AdamParams) {
        debug_assert_eq!(param.shape(), grad.shape());
        debug_assert_eq!(param.shape(), self.m.shape());
        self.step += 1;
        let bc1 = 1.0 - hp.beta1.powi(self.step as i32);
        let bc2 = 1.0 - hp.beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in param
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
            *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_convex_quadratic() {
        // f(x) = 0.5 * sum_i c_i (x_i - o_i)^2, minimum 0.
        let c = [1.0, 4.0, 0.25];
        let o = [0.5, -1.0, 2.0];
        let loss = |x: &DMatrix<f64>| (0..3).map(|i| 0.5 * c[i] * (x[i] - o[i]).powi(2)).sum::<f64>();
        let mut x = DMatrix::from_element(3, 1, 0.0);
        let mut state = AdamState::new(3, 1);
        let hp = AdamParams::with_lr(1e-2);
        for _ in 0..5000 {
            let g = DMatrix::from_fn(3, 1, |i, _| c[i] * (x[i] - o[i]));
            state.update(&mut x, &g, &hp);
        }
        assert!(loss(&x) < 1e-6, "loss {}", loss(&x));
        assert_eq!(state.step, 5000);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let mut x = DMatrix::from_element(2, 2, 0.3);
        let before = x.clone();
        let mut state = AdamState::new(2, 2);
        state.update(&mut x, &DMatrix::from_element(2, 2, 1.0), &AdamParams::with_lr(0.0));
        assert_eq!(x, before);
    }
}
