// $ cargo run --example calibrate_threshold
use std::collections::BTreeMap;

use opfreq::classify::{calibrate_threshold, classify, Calibration, ClassifierConfig};
use opfreq::distance::{distance_matrix, MetricSpec};
use opfreq::histogram::extract_features;
use opfreq::mutation::{make_family, MutationConfig, Technique};
use opfreq::synth::{random_program, SynthParams};

fn main() {
    let params = SynthParams::default();
    let cfgs = [
        MutationConfig::new(Technique::Regswap, 0, 0.0).unwrap(),
        MutationConfig::new(Technique::Permute, 0, 1.0).unwrap(),
    ];
    let mut sets = Vec::new();
    let mut labels = BTreeMap::new();
    for (k, name) in ["alpha", "beta"].iter().enumerate() {
        let base = random_program(name, 40 + k as u64, &params);
        let family = make_family(&base, 3, &cfgs).unwrap();
        for p in std::iter::once(&base).chain(&family.variants) {
            labels.insert(p.id().to_string(), name.to_string());
            sets.push(extract_features(p).unwrap());
        }
    }
    let matrix = distance_matrix(&sets, &MetricSpec::default()).unwrap();

    match calibrate_threshold(&matrix, &labels).unwrap() {
        Calibration::Separable { threshold, intra_max, inter_min } => {
            println!("threshold {threshold} (intra max {intra_max}, inter min {inter_min:.6})");
            let c = classify(&matrix, &ClassifierConfig::new(threshold).unwrap()).unwrap();
            for cluster in c.clusters {
                println!("  {}", cluster.join(" "));
            }
        }
        Calibration::Overlap { intra_max, inter_min } => {
            println!("families overlap: intra max {intra_max} >= inter min {inter_min}");
        }
    }
}
