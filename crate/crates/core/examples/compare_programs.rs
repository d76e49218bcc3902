// $ cargo run --example compare_programs
use opfreq::asm::parse_program;
use opfreq::distance::{min_match, symmetric_distance, MetricSpec};
use opfreq::histogram::extract_features;

const V1: &str = include_str!("../tests/fixtures/evol_v1.oasm");
const V2: &str = include_str!("../tests/fixtures/evol_v2.oasm");

fn main() {
    let a = extract_features(&parse_program(V1, "evol_v1").unwrap()).unwrap();
    let b = extract_features(&parse_program(V2, "evol_v2").unwrap()).unwrap();

    let metric = MetricSpec::default();
    let forward = min_match(&a, &b, &metric).unwrap();
    for e in &forward.entries {
        println!("{} -> {}: {:.6}", e.query_subroutine, e.target_subroutine, e.distance);
    }
    println!("directed v1 -> v2: {:.6}", forward.directed);
    println!("symmetric (squared, default): {:.6}", symmetric_distance(&a, &b, &metric).unwrap());

    let rooted = MetricSpec::minkowski(2.0).unwrap().with_root(true);
    println!("symmetric (rooted euclidean): {:.6}", symmetric_distance(&a, &b, &rooted).unwrap());
    let manhattan = MetricSpec::minkowski(1.0).unwrap();
    println!("symmetric (r = 1):            {:.6}", symmetric_distance(&a, &b, &manhattan).unwrap());
}
