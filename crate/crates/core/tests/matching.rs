mod common;

use common::rng;
use fingerwave_core::matcher::{euclidean, identify, verify, Aggregation, Matcher};
use fingerwave_core::pipeline::{ExtractionConfig, Template, TemplateStore, FEATURE_LEN};
use proptest::collection::vec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn template(finger_id: u32, sample_id: u32, features: Vec<f64>) -> Template {
    Template {
        finger_id,
        sample_id,
        features,
        config_hash: ExtractionConfig::default().config_hash(),
        source_path: None,
    }
}

fn store_of(templates: &[Template]) -> TemplateStore {
    let mut store = TemplateStore::new(ExtractionConfig::default());
    for t in templates {
        store.insert(t.clone()).unwrap();
    }
    store.finalize();
    store
}

fn random_templates(rng: &mut impl Rng, fingers: u32, samples: u32) -> Vec<Template> {
    let mut out = Vec::new();
    for f in 1..=fingers {
        for s in 1..=samples {
            let v = (0..FEATURE_LEN).map(|_| rng.random_range(-10.0..10.0)).collect();
            out.push(template(f, s, v));
        }
    }
    out
}

fn brute_min(probe: &[f64], templates: &[Template], finger: u32) -> f64 {
    templates
        .iter()
        .filter(|t| t.finger_id == finger)
        .map(|t| t.features.iter().zip(probe).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min)
}

fn feature_vec() -> impl Strategy<Value = Vec<f64>> {
    vec(-1e3f64..1e3, FEATURE_LEN)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euclidean_is_a_metric(a in feature_vec(), b in feature_vec(), c in feature_vec()) {
        let ab = euclidean(&a, &b).unwrap();
        prop_assert_eq!(euclidean(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, euclidean(&b, &a).unwrap());
        prop_assert!(euclidean(&a, &c).unwrap() <= ab + euclidean(&b, &c).unwrap() + 1e-9);
        if a != b {
            prop_assert!(ab > 0.0);
        }
    }
}

#[test]
fn verify_agrees_with_brute_force_minimum() {
    let mut rng = rng(61);
    let templates = random_templates(&mut rng, 5, 7);
    let store = store_of(&templates);
    for _ in 0..50 {
        let probe: Vec<f64> = (0..FEATURE_LEN).map(|_| rng.random_range(-10.0..10.0)).collect();
        let finger = rng.random_range(1..=5);
        let want = brute_min(&probe, &templates, finger);
        let d = verify(&template(0, 8, probe), finger, &store, want, Aggregation::Min).unwrap();
        assert!((d.distance - want).abs() < 1e-12);
        assert!(d.matched);
    }
}

#[test]
fn enrollment_order_does_not_matter() {
    let mut rng = rng(62);
    let templates = random_templates(&mut rng, 4, 7);
    let mut shuffled = templates.clone();
    shuffled.shuffle(&mut rng);
    let (a, b) = (store_of(&templates), store_of(&shuffled));
    let probe = template(0, 8, (0..FEATURE_LEN).map(|_| rng.random_range(-10.0..10.0)).collect());
    for agg in [Aggregation::Min, Aggregation::Mean, Aggregation::Median] {
        for f in 1..=4 {
            let (x, y) = (Matcher::new(&a, agg).score(&probe, f).unwrap(), Matcher::new(&b, agg).score(&probe, f).unwrap());
            assert_eq!(x.best_sample_id, y.best_sample_id);
            assert!((x.distance - y.distance).abs() < 1e-12);
        }
    }
}

#[test]
fn acceptance_is_monotone_in_the_threshold() {
    let mut rng = rng(63);
    let templates = random_templates(&mut rng, 3, 7);
    let store = store_of(&templates);
    let matcher = Matcher::new(&store, Aggregation::Min);
    let probe = template(0, 8, (0..FEATURE_LEN).map(|_| rng.random_range(-10.0..10.0)).collect());
    let mut previous = false;
    for k in 0..400 {
        let matched = matcher.verify(&probe, 2, k as f64 * 0.5).unwrap().matched;
        assert!(matched || !previous, "acceptance flipped back at threshold {}", k as f64 * 0.5);
        previous = matched;
    }
    assert!(previous);
}

#[test]
fn identify_ranks_like_a_sorted_brute_force() {
    let mut rng = rng(64);
    let templates = random_templates(&mut rng, 8, 3);
    let store = store_of(&templates);
    for _ in 0..20 {
        let probe: Vec<f64> = (0..FEATURE_LEN).map(|_| rng.random_range(-10.0..10.0)).collect();
        let threshold = rng.random_range(40.0..80.0);
        let ranked = identify(&template(0, 8, probe.clone()), &store, threshold, Aggregation::Min).unwrap();
        let mut want: Vec<(f64, u32)> = (1..=8).map(|f| (brute_min(&probe, &templates, f), f)).collect();
        want.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        assert_eq!(ranked.iter().map(|c| c.finger_id).collect::<Vec<_>>(), want.iter().map(|w| w.1).collect::<Vec<_>>());
        for c in &ranked {
            assert_eq!(c.within_threshold, c.distance <= threshold);
        }
    }
}
