// $ cargo run --example permutation
use opfreq::asm::{parse_instruction, parse_program, serialize_program};
use opfreq::mutation::{can_swap, permute_instructions, MutationConfig, Technique};

const BLOCK: &str = include_str!("../tests/fixtures/permute_order1.oasm");

fn main() {
    for (a, b) in [("mov eax, 0Fh", "push ecx"), ("push ecx", "add esi, ebx"), ("mov eax, 1", "mov ebx, eax"), ("cmp eax, 1", "jz out")] {
        let ok = can_swap(&parse_instruction(a).unwrap(), &parse_instruction(b).unwrap());
        println!("{a:<14} | {b:<14} swappable: {ok}");
    }

    let program = parse_program(BLOCK, "block").unwrap();
    let cfg = MutationConfig::new(Technique::Permute, 0, 2.0 / 3.0).unwrap();
    for seed in 0..4 {
        println!("\nseed {seed}:");
        print!("{}", serialize_program(&permute_instructions(&program, &cfg.with_seed(seed)).unwrap()));
    }
}
