//! Class-balanced, L2-regularised binary logistic regression fitted by
//! full-batch gradient descent.
//!
//! Objective, with `s_i` the balanced sample weight `N / (2 N_{y_i})`:
//! `J(w, b) = (1/N) Σ s_i [softplus(w·x_i + b) - y_i (w·x_i + b)] + λ/(2N) ‖w‖²`.
//! This is the usual `C = 1/λ` formulation divided by `N`; the bias is not
//! penalised.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticOptions {
    pub l2_lambda: f64,
    pub max_iter: usize,
    pub tolerance: f64,
    pub balanced: bool,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            l2_lambda: 1.0,
            max_iter: 10_000,
            tolerance: 1e-6,
            balanced: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sample_weights(y: &[bool], balanced: bool) -> Result<Vec<f64>> {
    let pos = y.iter().filter(|&&v| v).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleLabel);
    }
    let n = y.len() as f64;
    let (wp, wn) = if balanced {
        (n / (2.0 * pos as f64), n / (2.0 * neg as f64))
    } else {
        (1.0, 1.0)
    };
    Ok(y.iter().map(|&v| if v { wp } else { wn }).collect())
}

/// Value of the objective at `(weights, bias)`.
pub fn logistic_objective(x: &[Vec<f64>], y: &[bool], weights: &[f64], bias: f64, opts: &LogisticOptions) -> Result<f64> {
    let s = sample_weights(y, opts.balanced)?;
    Ok(objective(x, y, &s, weights, bias, opts.l2_lambda))
}

fn objective(x: &[Vec<f64>], y: &[bool], s: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = x.len() as f64;
    let data: f64 = x
        .iter()
        .zip(y)
        .zip(s)
        .map(|((xi, &yi), &si)| {
            let z = dot(w, xi) + b;
            si * (softplus(z) - if yi { z } else { 0.0 })
        })
        .sum();
    data / n + lambda / (2.0 * n) * w.iter().map(|v| v * v).sum::<f64>()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest eigenvalue of the weighted second-moment matrix of `[x, 1]`, by
/// power iteration; bounds the curvature of the data term (times 1/4).
fn curvature_bound(x: &[Vec<f64>], s: &[f64]) -> f64 {
    let d = x[0].len() + 1;
    let n = x.len() as f64;
    let mut m = vec![0.0; d * d];
    for (xi, &si) in x.iter().zip(s) {
        for a in 0..d {
            let va = if a + 1 == d { 1.0 } else { xi[a] };
            for b in 0..d {
                let vb = if b + 1 == d { 1.0 } else { xi[b] };
                m[a * d + b] += si * va * vb / n;
            }
        }
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mv: Vec<f64> = (0..d).map(|a| (0..d).map(|b| m[a * d + b] * v[b]).sum()).collect();
        let norm = mv.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = mv.into_iter().map(|t| t / norm).collect();
    }
    // Power iteration approaches from below; pad to stay a valid bound.
    lambda * 1.05
}

/// Fits from `init` (or zeros) until the gradient norm drops below the
/// tolerance or the iteration cap is reached.
pub fn fit_logistic(x: &[Vec<f64>], y: &[bool], opts: &LogisticOptions, init: Option<(&[f64], f64)>) -> Result<LogisticFit> {
    assert_eq!(x.len(), y.len());
    let s = sample_weights(y, opts.balanced)?;
    let d = x[0].len();
    let n = x.len() as f64;
    let (mut w, mut b) = match init {
        Some((w0, b0)) => (w0.to_vec(), b0),
        None => (vec![0.0; d], 0.0),
    };
    let step = 1.0 / (0.25 * curvature_bound(x, &s) + opts.l2_lambda / n);

    let mut grad_w = vec![0.0; d];
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for ((xi, &yi), &si) in x.iter().zip(y).zip(&s) {
            let r = si * (sigmoid(dot(&w, xi) + b) - if yi { 1.0 } else { 0.0 });
            for (g, v) in grad_w.iter_mut().zip(xi) {
                *g += r * v;
            }
            grad_b += r;
        }
        for (g, wj) in grad_w.iter_mut().zip(&w) {
            *g = *g / n + opts.l2_lambda / n * wj;
        }
        grad_b /= n;
        grad_norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if !grad_norm.is_finite() {
            return Err(Error::NonFinite {
                context: format!("logistic fit, iteration {iterations}"),
            });
        }
        if grad_norm < opts.tolerance {
            break;
        }
        for (wj, g) in w.iter_mut().zip(&grad_w) {
            *wj -= step * g;
        }
        b -= step * grad_b;
        iterations += 1;
    }
    let loss = objective(x, y, &s, &w, b, opts.l2_lambda);
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            context: "logistic fit, final loss".into(),
        });
    }
    Ok(LogisticFit {
        weights: w,
        bias: b,
        loss,
        grad_norm,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_label_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            fit_logistic(&x, &[true, true], &LogisticOptions::default(), None),
            Err(Error::SingleLabel)
        ));
    }

    #[test]
    fn separable_data_is_classified() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 10.0 - 2.0, 0.3]).collect();
        let y: Vec<bool> = x.iter().map(|v| v[0] > 0.0).collect();
        let fit = fit_logistic(&x, &y, &LogisticOptions::default(), None).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            let p = sigmoid(dot(&fit.weights, xi) + fit.bias);
            assert_eq!(p > 0.5, yi);
        }
    }

    #[test]
    fn converged_fit_has_small_gradient() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![((i * 37) % 11) as f64 / 5.0 - 1.0]).collect();
        let y: Vec<bool> = (0..50).map(|i| (i * 13) % 7 < 3).collect();
        let fit = fit_logistic(&x, &y, &LogisticOptions::default(), None).unwrap();
        assert!(fit.grad_norm < 1e-6);
    }
}
