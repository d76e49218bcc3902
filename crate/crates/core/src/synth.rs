//! Seeded random listings for building test corpora.
//!
//! Every program draws its own vocabulary and skewed mnemonic weights, so two
//! programs from different seeds almost always have different histograms,
//! while variants of one program (via [`crate::mutation`]) keep them.
//! Generated code never contains `nop`, which makes nop-garbage detectable.

use std::ops::RangeInclusive;

use crate::asm::{parse_instruction, Instruction, Program, Statement, Subroutine};
use crate::rng::SeededRng;

/// Mnemonics available to the generator. `ret` and the conditional jumps used
/// for labels are added on top of the drawn vocabulary.
pub const SYNTH_POOL: [&str; 22] = [
    "mov", "add", "sub", "xor", "and", "or", "cmp", "test", "adc", "sbb", "lea", "push", "pop",
    "inc", "dec", "neg", "not", "shl", "shr", "sar", "imul", "xchg",
];

const JUMPS: [&str; 4] = ["jz", "jnz", "jb", "jge"];
const REGS: [&str; 6] = ["eax", "ebx", "ecx", "edx", "esi", "edi"];
const BASES: [&str; 4] = ["ebp", "esi", "edi", "ebx"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub subroutines: RangeInclusive<usize>,
    /// Instructions per subroutine, not counting the closing `ret`.
    pub body_len: RangeInclusive<usize>,
    /// Number of distinct pool mnemonics a program may use.
    pub vocabulary: usize,
    /// Chance per instruction of opening a forward branch to a label.
    pub label_chance: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            subroutines: 2..=5,
            body_len: 8..=30,
            vocabulary: 10,
            label_chance: 0.08,
        }
    }
}

fn memory(rng: &mut SeededRng) -> String {
    let base = rng.pick(&BASES);
    let disp = 4 * rng.below(17);
    if rng.chance(0.2) {
        let index = rng.pick(&REGS[..4]);
        let scale = rng.pick(&[1, 2, 4]);
        if *scale == 1 {
            format!("[{base}+{index}+{disp}]")
        } else {
            format!("[{base}+{index}*{scale}+{disp}]")
        }
    } else if disp == 0 {
        format!("[{base}]")
    } else {
        format!("[{base}+{disp}]")
    }
}

fn line(rng: &mut SeededRng, m: &str) -> String {
    let r = *rng.pick(&REGS);
    let s = *rng.pick(&REGS);
    match m {
        "mov" | "add" | "sub" | "xor" | "and" | "or" | "cmp" | "test" | "adc" | "sbb" => {
            match rng.below(4) {
                0 => format!("{m} {r}, {s}"),
                1 => format!("{m} {r}, {}", rng.below(4096)),
                2 => format!("{m} {r}, {}", memory(rng)),
                _ => format!("{m} {}, {r}", memory(rng)),
            }
        }
        "lea" => format!("lea {r}, {}", memory(rng)),
        "push" => {
            if rng.chance(0.25) {
                format!("push {}", rng.below(256))
            } else {
                format!("push {r}")
            }
        }
        "pop" | "inc" | "dec" | "neg" | "not" => format!("{m} {r}"),
        "shl" | "shr" | "sar" => format!("{m} {r}, {}", rng.between(1, 31)),
        "imul" | "xchg" => format!("{m} {r}, {s}"),
        other => panic!("no operand shape for `{other}`"),
    }
}

fn instruction(text: &str) -> Instruction {
    parse_instruction(text).unwrap_or_else(|e| panic!("generated `{text}` does not parse: {e}"))
}

/// Builds one program. Same `(id, seed, params)` always gives the same program.
pub fn random_program(id: &str, seed: u64, params: &SynthParams) -> Program {
    let mut rng = SeededRng::new(seed);
    let mut pool: Vec<&str> = SYNTH_POOL.to_vec();
    rng.shuffle(&mut pool);
    pool.truncate(params.vocabulary.clamp(1, SYNTH_POOL.len()));
    // cubing spreads the weights so each program has a few dominant mnemonics
    let weights: Vec<f64> = pool.iter().map(|_| 0.02 + rng.unit().powi(3)).collect();
    let total: f64 = weights.iter().sum();

    let n_subs = rng.between(*params.subroutines.start(), *params.subroutines.end()).max(1);
    let mut next_label = 0usize;
    let subs = (0..n_subs)
        .map(|k| {
            let len = rng.between(*params.body_len.start(), *params.body_len.end());
            let mut statements = Vec::with_capacity(len + 2);
            // (label, instructions left before it is placed)
            let mut pending: Vec<(String, usize)> = Vec::new();
            for _ in 0..len {
                pending.retain_mut(|(name, left)| {
                    if *left == 0 {
                        statements.push(Statement::Label(name.clone()));
                        false
                    } else {
                        *left -= 1;
                        true
                    }
                });
                if rng.chance(params.label_chance) {
                    let name = format!("L{next_label}");
                    next_label += 1;
                    let jump = rng.pick(&JUMPS);
                    statements.push(Statement::Instruction(instruction(&format!("{jump} {name}"))));
                    pending.push((name, rng.between(1, 6)));
                    continue;
                }
                let mut x = rng.unit() * total;
                let mut choice = pool[pool.len() - 1];
                for (m, w) in pool.iter().zip(&weights) {
                    if x < *w {
                        choice = m;
                        break;
                    }
                    x -= w;
                }
                statements.push(Statement::Instruction(instruction(&line(&mut rng, choice))));
            }
            for (name, _) in pending {
                statements.push(Statement::Label(name));
            }
            statements.push(Statement::Instruction(instruction("ret")));
            Subroutine::from_statements(format!("sub_{k}"), statements).expect("generated subroutine is valid")
        })
        .collect();
    Program::new(id, subs).expect("generated program is valid")
}
