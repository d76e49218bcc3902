// $ cargo run --example histograms
use opfreq::asm::parse_program;
use opfreq::histogram::{build_histogram, extract_features, normalize, HistogramCache};

const EVOL: &str = include_str!("../tests/fixtures/evol_v2.oasm");

fn main() {
    let program = parse_program(EVOL, "evol_v2").unwrap();
    let raw = build_histogram(program.id(), &program.subroutines()[0]).unwrap();
    println!("raw counts:");
    for (m, c) in raw.iter() {
        println!("  {m:<5} {c}");
    }
    let norm = normalize(&raw).unwrap();
    println!("normalized (sum {}):", norm.total());
    for (m, f) in norm.iter() {
        println!("  {m:<5} {f:.4}");
    }

    // what `opfreq features` writes to disk
    let cache = HistogramCache::build(&program, EVOL.as_bytes()).unwrap();
    print!("\n{}", cache.to_json());
    assert_eq!(extract_features(&program).unwrap(), cache.features);
}
