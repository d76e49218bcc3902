// $ cargo run --example instruction_substitution
use opfreq::asm::{parse_program, serialize_program};
use opfreq::mutation::{default_rulebook, rulebook_digest, substitute_instructions, MutationConfig, Technique};

const BISTRO: &str = include_str!("../tests/fixtures/bistro_v1.oasm");

fn main() {
    let book = default_rulebook();
    println!("{} rules, {}", book.len(), rulebook_digest(&book));
    for rule in &book {
        println!("  {rule}");
    }

    let program = parse_program(BISTRO, "bistro").unwrap();
    for seed in [1, 2] {
        let cfg = MutationConfig::new(Technique::Substitute, seed, 1.0).unwrap();
        println!("\nseed {seed}:");
        print!("{}", serialize_program(&substitute_instructions(&program, &cfg).unwrap()));
    }
}
