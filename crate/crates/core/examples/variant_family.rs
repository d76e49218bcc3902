// Builds variant families, the distance matrix over them and the threshold
// classification, i.e. the whole pipeline in one place.
//
// $ cargo run --example variant_family
use opfreq::classify::{classify, render_table, ClassifierConfig};
use opfreq::distance::{distance_matrix, MetricSpec};
use opfreq::histogram::extract_features;
use opfreq::mutation::{make_family, MutationConfig, Technique};
use opfreq::synth::{random_program, SynthParams};

fn main() {
    let params = SynthParams::default();
    let base = random_program("evol", 11, &params);

    let preserving = [
        MutationConfig::new(Technique::Regswap, 1, 0.0).unwrap(),
        MutationConfig::new(Technique::Permute, 2, 1.0).unwrap(),
        MutationConfig::new(Technique::TransposeModules, 3, 0.0).unwrap(),
    ];
    let same = make_family(&base, 3, &preserving).unwrap();
    // nop padding shifts every histogram, like the later Evol generations
    let padded = make_family(&base, 2, &[MutationConfig::new(Technique::GarbageNop, 4, 0.3).unwrap()]).unwrap();
    println!("{}", same.manifest.to_json());

    let mut programs = vec![base.clone()];
    programs.extend(same.variants);
    programs.extend(padded.variants.into_iter().map(|v| {
        let id = v.id().replace("-v", "-nop");
        v.with_id(id)
    }));
    programs.push(random_program("other", 99, &params));

    let sets: Vec<_> = programs.iter().map(|p| extract_features(p).unwrap()).collect();
    let matrix = distance_matrix(&sets, &MetricSpec::default()).unwrap();
    let cfg = ClassifierConfig::default();
    print!("{}", render_table(&matrix, &cfg));
    for cluster in classify(&matrix, &cfg).unwrap().clusters {
        println!("{}", cluster.join(" "));
    }
}
