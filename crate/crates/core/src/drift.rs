//! Drift detection on reconstruction-error samples with the two-sample
//! Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use crate::dataset::Snapshot;
use crate::error::{Error, Result};
use crate::explainer::{class_from_errors, ExplainerState};
use crate::graph::Class;

pub const DEFAULT_SIGNIFICANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub t: usize,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub drifted: bool,
    pub sample_sizes: (usize, usize),
}

/// Kolmogorov survival function `Q(λ) = P(K > λ)`.
///
/// Uses the alternating series `2 Σ (-1)^(k-1) exp(-2 k² λ²)` for λ ≥ 1.18
/// and the Jacobi theta form
/// `1 - (√(2π)/λ) Σ exp(-(2k-1)² π² / (8 λ²))` below it; both are summed
/// until terms vanish at double precision.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..=100 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * c).exp();
            sum += term;
            if term < 1e-300 || term < sum * 1e-17 {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 || term < sum.abs() * 1e-17 {
                break;
            }
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}

/// Largest gap between the empirical CDFs of `a` and `b`, computed by a
/// merge over the sorted samples so that tied values step together.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Two-sample KS statistic and asymptotic p-value `Q(√n_e · D)` with
/// `n_e = n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let d = ks_statistic(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ne = na * nb / (na + nb);
    Ok((d, kolmogorov_q(ne.sqrt() * d)))
}

pub fn detect(t: usize, prev: &[f64], curr: &[f64], significance: f64) -> Result<DriftReport> {
    detect_with_hook(t, prev, curr, significance, |_| {})
}

/// [`detect`], calling `on_drift` when the test rejects.
pub fn detect_with_hook<F>(t: usize, prev: &[f64], curr: &[f64], significance: f64, mut on_drift: F) -> Result<DriftReport>
where
    F: FnMut(&DriftReport),
{
    let (ks_statistic, p_value) = ks_two_sample(prev, curr)?;
    let report = DriftReport {
        t,
        ks_statistic,
        p_value,
        drifted: p_value < significance,
        sample_sizes: (prev.len(), curr.len()),
    };
    if report.drifted {
        on_drift(&report);
    }
    Ok(report)
}

fn labelled_errors(state: &ExplainerState, snapshot: &Snapshot) -> Result<Vec<(Class, f64)>> {
    let mut graphs: Vec<_> = snapshot.graphs().collect();
    graphs.sort_by(|a, b| a.id().cmp(b.id()));
    let errors = state.errors_for(graphs.iter().copied());
    graphs
        .iter()
        .map(|g| {
            let h = errors.get(g.id()).expect("computed above");
            let class = if snapshot.t == 0 {
                *state
                    .initial_labels
                    .get(g.id())
                    .ok_or_else(|| Error::MissingLabel { graph_id: g.id().clone() })?
            } else {
                class_from_errors(h)
            };
            Ok((class, h[class.index()]))
        })
        .collect()
}

/// Each graph's reconstruction error under the autoencoder of its class:
/// classifier labels at t = 0, inferred labels afterwards. Ordered by graph id.
pub fn error_sample(state: &ExplainerState, snapshot: &Snapshot) -> Result<Vec<f64>> {
    Ok(labelled_errors(state, snapshot)?.into_iter().map(|(_, h)| h).collect())
}

/// [`error_sample`] split by class.
pub fn error_sample_by_class(state: &ExplainerState, snapshot: &Snapshot) -> Result<[Vec<f64>; 2]> {
    let mut out = [Vec::new(), Vec::new()];
    for (c, h) in labelled_errors(state, snapshot)? {
        out[c.index()].push(h);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.1, 0.7, 0.7, 0.2];
        let (d, p) = ks_two_sample(&a, &a).unwrap();
        assert_eq!(d, 0.0);
        assert!(p > 0.999);
        assert!(!detect(1, &a, &a, 0.05).unwrap().drifted);
    }

    #[test]
    fn disjoint_supports() {
        let (d, _) = ks_two_sample(&[0.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(ks_two_sample(&[], &[1.0]), Err(Error::EmptySample)));
        assert!(matches!(detect(0, &[1.0], &[], 0.05), Err(Error::EmptySample)));
    }

    #[test]
    fn zero_significance_never_fires() {
        let r = detect(2, &[0.0; 30], &[1.0; 30], 0.0).unwrap();
        assert!(!r.drifted);
        assert_eq!(r.sample_sizes, (30, 30));
    }

    #[test]
    fn hook_fires_only_on_drift() {
        let mut fired = 0;
        detect_with_hook(1, &[0.0; 30], &[1.0; 30], 0.05, |_| fired += 1).unwrap();
        detect_with_hook(1, &[0.0; 30], &[0.0; 30], 0.05, |_| fired += 1).unwrap();
        assert_eq!(fired, 1);
    }

    #[test]
    fn q_function_branches_agree() {
        // Both representations are exact; compare them at the switch point.
        let lambda: f64 = 1.18;
        let series: f64 = 2.0
            * (1..=100)
                .map(|k| {
                    let kf = k as f64;
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s * (-2.0 * kf * kf * lambda * lambda).exp()
                })
                .sum::<f64>();
        assert!((kolmogorov_q(lambda - 1e-12) - series).abs() < 1e-12);
        assert!((kolmogorov_q(lambda) - series).abs() < 1e-12);
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(5.0) < 1e-20);
    }
}
