// $ cargo run --example garbage_insertion
use opfreq::asm::serialize_program;
use opfreq::distance::{symmetric_distance, MetricSpec};
use opfreq::histogram::extract_features;
use opfreq::mutation::{insert_garbage, MutationConfig, Technique};
use opfreq::synth::{random_program, SynthParams};

fn main() {
    let params = SynthParams { subroutines: 1..=1, body_len: 6..=6, ..SynthParams::default() };
    let base = random_program("base", 3, &params);
    print!("{}", serialize_program(&base));
    let fb = extract_features(&base).unwrap();

    for technique in [Technique::Garbage, Technique::GarbageNop] {
        let cfg = MutationConfig::new(technique, 11, 0.4).unwrap();
        let out = insert_garbage(&base, &cfg).unwrap();
        let d = symmetric_distance(&fb, &extract_features(&out).unwrap(), &MetricSpec::default()).unwrap();
        println!("\n{technique} (distance to base {d:.4}):");
        print!("{}", serialize_program(&out));
    }
}
