#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use opfreq::asm::{parse_program, Program};
use opfreq::rng::SeededRng;

use oracle::Listing;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> Program {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    parse_program(&text, name.trim_end_matches(".oasm")).unwrap()
}

const MNEMONICS: [&str; 10] = ["mov", "push", "pop", "add", "xor", "cmp", "jnz", "lea", "nop", "ret"];

/// Random listing: up to `max_subs` subroutines (at least one non-empty), at
/// most `max_vocab` distinct mnemonics, bodies of at most `max_body` instructions.
pub fn random_listing(rng: &mut SeededRng, max_subs: usize, max_vocab: usize, max_body: usize) -> Listing {
    let mut pool = MNEMONICS.to_vec();
    rng.shuffle(&mut pool);
    pool.truncate(rng.between(1, max_vocab));
    let n = rng.between(1, max_subs);
    let mut subs: Listing = (0..n)
        .map(|_| {
            let len = rng.between(0, max_body);
            (0..len).map(|_| rng.pick(&pool).to_string()).collect()
        })
        .collect();
    if subs.iter().all(Vec::is_empty) {
        subs[0].push(pool[0].to_string());
    }
    subs
}

/// Renders a listing as `.oasm` text with assorted operand shapes and case.
pub fn render(listing: &Listing, rng: &mut SeededRng) -> String {
    let mut out = String::new();
    for (k, sub) in listing.iter().enumerate() {
        out.push_str(&format!("proc f{k}\n"));
        for m in sub {
            let m = if rng.chance(0.2) { m.to_uppercase() } else { m.clone() };
            let ops = match rng.below(4) {
                0 => String::new(),
                1 => " eax".to_string(),
                2 => " ebx, 10h".to_string(),
                _ => " ecx, [esi+4]".to_string(),
            };
            out.push_str(&format!("  {m}{ops}\n"));
        }
        out.push_str("endp\n");
    }
    out
}

pub fn parse_listing(listing: &Listing, id: &str, rng: &mut SeededRng) -> Program {
    parse_program(&render(listing, rng), id).unwrap()
}
