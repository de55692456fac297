mod common;

use common::{brute_force_ks, kolmogorov_series};
use dygrace::dataset::{Member, Snapshot};
use dygrace::drift::{detect, error_sample, ks_two_sample};
use dygrace::explainer::{ExplainerConfig, ExplainerState};
use dygrace::gae::GaeModel;
use dygrace::scorer::PairScorer;
use dygrace::{Class, Graph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::{BTreeMap, BTreeSet};

fn sample(n: usize, mean: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = Normal::new(mean, 1.0).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

#[test]
fn statistic_and_p_value_match_references() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..40 {
        let a = sample(20, 0.0, &mut rng);
        let b = sample(20, 0.1 * i as f64 / 4.0, &mut rng);
        let (d, p) = ks_two_sample(&a, &b).unwrap();
        assert_eq!(d, brute_force_ks(&a, &b));
        let lambda = (10.0f64).sqrt() * d;
        assert!((p - kolmogorov_series(lambda).clamp(0.0, 1.0)).abs() < 1e-6, "lambda {lambda}");
    }
}

#[test]
fn ties_step_together() {
    let (d, _) = ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
    assert_eq!(d, brute_force_ks(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]));
    assert!((d - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn false_positive_rate_is_controlled() {
    let mut fired = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample(50, 0.0, &mut rng);
        let b = sample(50, 0.0, &mut rng);
        if detect(1, &a, &b, 0.05).unwrap().drifted {
            fired += 1;
        }
    }
    assert!(fired <= 2, "fired {fired} of 20");
}

#[test]
fn large_shift_is_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = sample(50, 0.0, &mut rng);
    let b = sample(50, 1.5, &mut rng);
    assert!(detect(1, &a, &b, 0.05).unwrap().drifted);
}

fn zero_state(ids: &[&str]) -> ExplainerState {
    ExplainerState {
        f0: GaeModel::zeros(Class::Zero),
        f1: GaeModel::zeros(Class::One),
        scorer: PairScorer::from_parameters(0.0, 0.0, 0.0, 0.0, [0.0; 3], [1.0; 3]),
        current_t: 0,
        config: ExplainerConfig::default(),
        train_ids: BTreeSet::new(),
        initial_labels: ids.iter().map(|id| ((*id).into(), Class::Zero)).collect::<BTreeMap<_, _>>(),
    }
}

#[test]
fn zero_models_give_ln2_samples() {
    let members: Vec<Member> = ["b", "a", "c"]
        .iter()
        .map(|id| Member { graph: Graph::from_edges(*id, 3, &[(0, 1, 1.0)]).unwrap(), label: Class::Zero })
        .collect();
    let state = zero_state(&["a", "b", "c"]);
    let s0 = Snapshot::new(0, members.clone()).unwrap();
    let s1 = Snapshot::new(1, members[..1].to_vec()).unwrap();
    let e0 = error_sample(&state, &s0).unwrap();
    assert_eq!(e0.len(), 3);
    assert!(e0.iter().all(|h| (h - std::f64::consts::LN_2).abs() < 1e-15));
    assert_eq!(error_sample(&state, &s1).unwrap().len(), 1);
}

#[test]
fn error_sample_follows_graph_id_order() {
    let g = |id: &str, e: &[(usize, usize, f64)]| Member { graph: Graph::from_edges(id, 4, e).unwrap(), label: Class::Zero };
    let mut state = zero_state(&["x", "y"]);
    state.f0 = GaeModel::new(Class::Zero, 2);
    state.f1 = GaeModel::new(Class::One, 2);
    let gx = g("x", &[(0, 1, 1.0)]);
    let gy = g("y", &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
    let s = Snapshot::new(0, vec![gy.clone(), gx.clone()]).unwrap();
    let e = error_sample(&state, &s).unwrap();
    assert_eq!(e, vec![state.f0.reconstruction_error(&gx.graph), state.f0.reconstruction_error(&gy.graph)]);
}

proptest! {
    #[test]
    fn ks_invariants(
        a in prop::collection::vec(-100.0f64..100.0, 1..40),
        b in prop::collection::vec(-100.0f64..100.0, 1..40),
    ) {
        let (d, p) = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((0.0..=1.0).contains(&p));
        let (d2, p2) = ks_two_sample(&b, &a).unwrap();
        prop_assert_eq!(d, d2);
        prop_assert_eq!(p, p2);
        let f = |x: &f64| (x / 50.0).exp() * 3.0 + 1.0;
        let ta: Vec<f64> = a.iter().map(f).collect();
        let tb: Vec<f64> = b.iter().map(f).collect();
        prop_assert_eq!(ks_two_sample(&ta, &tb).unwrap().0, d);
        let r = detect(4, &a, &b, 0.05).unwrap();
        prop_assert_eq!(r.drifted, r.p_value < 0.05);
        prop_assert_eq!(r, detect(4, &a, &b, 0.05).unwrap());
    }
}
