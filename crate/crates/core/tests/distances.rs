mod common;

use std::collections::BTreeMap;

use common::oracle;
use opfreq::asm::Mnemonic;
use opfreq::distance::{directed_distance, distance_matrix, min_match, symmetric_distance, MetricSpec};
use opfreq::histogram::extract_features;
use opfreq::rng::SeededRng;
use opfreq::synth::{random_program, SynthParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_oracle_for_several_exponents(seed in any::<u64>(), r in prop::sample::select(vec![1.0, 2.0, 2.5, 3.0]), root in any::<bool>()) {
        let mut rng = SeededRng::new(seed);
        let a = common::random_listing(&mut rng, 4, 6, 20);
        let b = common::random_listing(&mut rng, 4, 6, 20);
        let fa = extract_features(&common::parse_listing(&a, "a", &mut rng)).unwrap();
        let fb = extract_features(&common::parse_listing(&b, "b", &mut rng)).unwrap();
        let metric = MetricSpec::minkowski(r).unwrap().with_root(root);
        let got = symmetric_distance(&fa, &fb, &metric).unwrap();
        let want = oracle::distance(&a, &b, r, root);
        prop_assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
        let d = directed_distance(&fa, &fb, &MetricSpec::default()).unwrap();
        prop_assert!((d - oracle::directed_distance(&a, &b, 2.0)).abs() <= 1e-9);
    }

    #[test]
    fn weighted_matches_oracle(seed in any::<u64>(), w in 0.1f64..5.0) {
        let mut rng = SeededRng::new(seed);
        let a = common::random_listing(&mut rng, 3, 6, 15);
        let b = common::random_listing(&mut rng, 3, 6, 15);
        let fa = extract_features(&common::parse_listing(&a, "a", &mut rng)).unwrap();
        let fb = extract_features(&common::parse_listing(&b, "b", &mut rng)).unwrap();
        let weights = BTreeMap::from([(Mnemonic::new("mov").unwrap(), w), (Mnemonic::new("nop").unwrap(), 1.0 / w)]);
        let metric = MetricSpec::default().with_weights(weights).unwrap();
        let got = symmetric_distance(&fa, &fb, &metric).unwrap();
        let want = oracle::weighted_distance(&a, &b, 2.0, false, |m| match m {
            "mov" => w,
            "nop" => 1.0 / w,
            _ => 1.0,
        });
        prop_assert!((got - want).abs() <= 1e-9);
    }

    #[test]
    fn each_minimum_is_a_true_minimum(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let a = common::random_listing(&mut rng, 4, 6, 20);
        let b = common::random_listing(&mut rng, 4, 6, 20);
        let fa = extract_features(&common::parse_listing(&a, "a", &mut rng)).unwrap();
        let fb = extract_features(&common::parse_listing(&b, "b", &mut rng)).unwrap();
        let report = min_match(&fa, &fb, &MetricSpec::default()).unwrap();
        for e in &report.entries {
            for g in fb.histograms() {
                let d = opfreq::distance::histogram_distance(&fa.histograms()[e.query_index], g, &MetricSpec::default()).unwrap();
                prop_assert!(e.distance <= d);
            }
        }
        // adding a target subroutine can only lower the minima
        let mut b2 = b.clone();
        b2.push(a[0].clone());
        let fb2 = extract_features(&common::parse_listing(&b2, "b", &mut rng)).unwrap();
        let widened = min_match(&fa, &fb2, &MetricSpec::default()).unwrap();
        for (x, y) in widened.minima().iter().zip(report.minima()) {
            prop_assert!(*x <= y + 1e-15);
        }
    }
}

#[test]
fn unrooted_distance_has_homogeneity_degree_r() {
    // one bin moves by 0.25 vs 0.5: doubling the gap multiplies by 2^r
    let listing = |n_mov: usize, n_push: usize| vec![[vec!["mov".to_string(); n_mov], vec!["push".to_string(); n_push]].concat()];
    let base = listing(4, 0);
    let near = listing(3, 1);
    let far = listing(2, 2);
    let mut rng = SeededRng::new(0);
    let f = |l: &oracle::Listing, rng: &mut SeededRng| extract_features(&common::parse_listing(l, "x", rng)).unwrap();
    let (fb, fn_, ff) = (f(&base, &mut rng), f(&near, &mut rng), f(&far, &mut rng));
    for r in [1.0, 2.0, 3.0] {
        let m = MetricSpec::minkowski(r).unwrap();
        let ratio = symmetric_distance(&fb, &ff, &m).unwrap() / symmetric_distance(&fb, &fn_, &m).unwrap();
        assert!((ratio - 2f64.powf(r)).abs() < 1e-12, "r={r}: {ratio}");
        let rooted = m.clone().with_root(true);
        let ratio = symmetric_distance(&fb, &ff, &rooted).unwrap() / symmetric_distance(&fb, &fn_, &rooted).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
    }
}

#[test]
fn matrix_agrees_with_pairwise_calls() {
    let sets: Vec<_> = (0..6)
        .map(|k| extract_features(&random_program(&format!("p{k}"), k, &SynthParams::default())).unwrap())
        .collect();
    let m = distance_matrix(&sets, &MetricSpec::default()).unwrap();
    for i in 0..6 {
        assert_eq!(m.get(i, i), 0.0);
        for j in 0..6 {
            if i != j {
                assert_eq!(m.get(i, j), symmetric_distance(&sets[i], &sets[j], &MetricSpec::default()).unwrap());
            }
        }
    }
    let again = distance_matrix(&sets, &MetricSpec::default()).unwrap();
    assert_eq!(again.to_json(), m.to_json());
}
