mod common;

use opfreq::asm::{parse_program, serialize_program, Program};
use opfreq::distance::{symmetric_distance, MetricSpec};
use opfreq::histogram::extract_features;
use opfreq::mutation::{
    apply_rule_at, can_swap, default_rulebook, make_family, mutate, permute_instructions, swap_registers,
    MutationConfig, RegisterPermutation, Technique,
};
use opfreq::synth::{random_program, SynthParams};
use proptest::prelude::*;

const REGSWAP_PERMUTATION: &str = "edx=eax,edi=ebx,esi=edx,eax=edi,ebx=esi";

fn lines(p: &Program) -> Vec<String> {
    p.subroutines()[0].body().iter().map(|i| i.to_string()).collect()
}

fn distance(a: &Program, b: &Program) -> f64 {
    let m = MetricSpec::default();
    symmetric_distance(&extract_features(a).unwrap(), &extract_features(b).unwrap(), &m).unwrap()
}

fn sorted_histograms(p: &Program) -> Vec<String> {
    let set = extract_features(p).unwrap();
    let mut v: Vec<String> = set
        .histograms()
        .iter()
        .map(|h| h.iter().map(|(m, f)| format!("{m}:{f:?}")).collect::<Vec<_>>().join(","))
        .collect();
    v.sort();
    v
}

#[test]
fn regswap_listing_maps_exactly() {
    let v1 = common::fixture("regswap_v1.oasm");
    let v2 = common::fixture("regswap_v2.oasm");
    let perm: RegisterPermutation = REGSWAP_PERMUTATION.parse().unwrap();
    let out = swap_registers(&v1, &perm).unwrap();
    assert_eq!(lines(&out), lines(&v2));
}

#[test]
fn bistro_listing_maps_exactly() {
    let v1 = common::fixture("bistro_v1.oasm");
    let v2 = common::fixture("bistro_v2.oasm");
    let book = default_rulebook();
    let rule = |name: &str| book.iter().find(|r| r.name() == name).unwrap().clone();
    let mut sub = v1.subroutines()[0].clone();
    for (name, index) in [
        ("frame-mov-to-push-pop", 1),
        ("test-to-or", 4),
        ("or-to-test", 7),
        ("zero-xor-to-sub", 9),
    ] {
        sub = apply_rule_at(&sub, index, &rule(name)).unwrap();
    }
    let got: Vec<String> = sub.body().iter().map(|i| i.to_string()).collect();
    assert_eq!(got, lines(&v2));
    // and back again with the inverse rules
    for (name, index) in [
        ("frame-push-pop-to-mov", 1),
        ("or-to-test", 3),
        ("test-to-or", 6),
        ("zero-sub-to-xor", 8),
    ] {
        sub = apply_rule_at(&sub, index, &rule(name)).unwrap();
    }
    assert_eq!(&sub, &v1.subroutines()[0]);
}

#[test]
fn permutation_example_is_reachable() {
    let order1 = common::fixture("permute_order1.oasm");
    let order2 = common::fixture("permute_order2.oasm");
    // every pair here commutes, so each attempt is a transposition; the target
    // is a 3-cycle and needs an even number of attempts
    let cfg = MutationConfig::new(Technique::Permute, 0, 2.0 / 3.0).unwrap();
    let hit = (0..200u64).any(|seed| {
        let out = permute_instructions(&order1, &cfg.with_seed(seed)).unwrap();
        lines(&out) == lines(&order2)
    });
    assert!(hit);
    let body = order1.subroutines()[0].body();
    assert!(can_swap(&body[1], &body[2]));
    assert!(can_swap(&body[0], &body[1]));
}

#[test]
fn dependent_swap_is_rejected() {
    let p = parse_program("proc f\n  mov eax, 1\n  mov ebx, eax\nendp\n", "p").unwrap();
    let cfg = MutationConfig::new(Technique::Permute, 0, 1.0).unwrap();
    for seed in 0..50 {
        assert_eq!(permute_instructions(&p, &cfg.with_seed(seed)).unwrap(), p);
    }
}

#[test]
fn nop_garbage_family_moves_away() {
    let base = random_program("base", 77, &SynthParams::default());
    let cfg = MutationConfig::new(Technique::GarbageNop, 5, 0.3).unwrap();
    let fam = make_family(&base, 3, &[cfg]).unwrap();
    for v in &fam.variants {
        assert!(distance(&base, v) > 0.0);
    }
}

#[test]
fn preserving_family_stays_at_zero() {
    let base = random_program("base", 78, &SynthParams::default());
    let cfgs = [
        MutationConfig::new(Technique::Regswap, 1, 0.0).unwrap(),
        MutationConfig::new(Technique::Permute, 2, 1.0).unwrap(),
    ];
    let fam = make_family(&base, 5, &cfgs).unwrap();
    for v in &fam.variants {
        assert_eq!(distance(&base, v), 0.0);
    }
}

fn technique() -> impl Strategy<Value = Technique> {
    prop::sample::select(Technique::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preserving_techniques_keep_histograms(seed in any::<u64>(), t in prop::sample::select(vec![Technique::Regswap, Technique::Permute, Technique::TransposeModules]), d in 0.0f64..=1.0) {
        let p = random_program("p", seed, &SynthParams::default());
        let out = mutate(&p, &MutationConfig::new(t, seed ^ 0x5a5a, d).unwrap()).unwrap();
        prop_assert_eq!(sorted_histograms(&out), sorted_histograms(&p));
        prop_assert!(distance(&p, &out) <= 1e-12);
    }

    #[test]
    fn nop_garbage_perturbs(seed in any::<u64>(), d in 0.2f64..=1.0) {
        let p = random_program("p", seed, &SynthParams::default());
        let out = mutate(&p, &MutationConfig::new(Technique::GarbageNop, seed, d).unwrap()).unwrap();
        prop_assert!(distance(&p, &out) > 0.0);
    }

    #[test]
    fn every_technique_is_deterministic_and_serializable(seed in any::<u64>(), t in technique(), d in 0.0f64..=1.0) {
        let p = random_program("p", seed, &SynthParams::default());
        let cfg = MutationConfig::new(t, seed, d).unwrap();
        let a = mutate(&p, &cfg).unwrap();
        let b = mutate(&p, &cfg).unwrap();
        let text = serialize_program(&a);
        prop_assert_eq!(&text, &serialize_program(&b));
        prop_assert_eq!(parse_program(&text, "p").unwrap(), a);
    }

    #[test]
    fn substitution_keeps_labels_in_range(seed in any::<u64>()) {
        let params = SynthParams { label_chance: 0.3, ..SynthParams::default() };
        let p = random_program("p", seed, &params);
        let out = mutate(&p, &MutationConfig::new(Technique::Substitute, seed, 1.0).unwrap()).unwrap();
        for (a, b) in p.subroutines().iter().zip(out.subroutines()) {
            let names = |s: &opfreq::asm::Subroutine| s.labels().iter().map(|l| l.name.clone()).collect::<Vec<_>>();
            prop_assert_eq!(names(a), names(b));
        }
    }
}
