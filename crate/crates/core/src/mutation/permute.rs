use crate::asm::{effects, Instruction, Program, Subroutine};
use crate::rng::SeededRng;

use super::{MutationConfig, MutationError, Technique};

/// Whether two adjacent instructions can trade places without changing the
/// result: neither transfers control or has unknown effects, neither writes a
/// register, the flags, or memory that the other reads or writes.
pub fn can_swap(first: &Instruction, second: &Instruction) -> bool {
    let a = effects(first);
    let b = effects(second);
    if !a.known || !b.known || a.control_transfer || b.control_transfer {
        return false;
    }
    let regs_clash = a.writes.iter().any(|r| b.reads.contains(r) || b.writes.contains(r))
        || b.writes.iter().any(|r| a.reads.contains(r));
    let flags_clash =
        (a.writes_flags && (b.reads_flags || b.writes_flags)) || (b.writes_flags && a.reads_flags);
    let memory_clash = (a.writes_memory && (b.reads_memory || b.writes_memory))
        || (b.writes_memory && a.reads_memory);
    !(regs_clash || flags_clash || memory_clash)
}

fn permute_subroutine(sub: &Subroutine, density: f64, rng: &mut SeededRng) -> Subroutine {
    let len = sub.body().len();
    if len < 2 {
        return sub.clone();
    }
    let mut body = sub.body().to_vec();
    let attempts = (density * len as f64).round() as usize;
    for _ in 0..attempts {
        let k = rng.below(len - 1);
        if sub.has_label_at(k) || sub.has_label_at(k + 1) {
            continue;
        }
        if can_swap(&body[k], &body[k + 1]) {
            body.swap(k, k + 1);
        }
    }
    sub.with_body(body)
}

/// Makes `round(density * len)` attempts per subroutine to swap a random
/// adjacent pair, keeping only swaps that pass [`can_swap`] and do not move an
/// instruction across or off a label.
pub fn permute_instructions(p: &Program, cfg: &MutationConfig) -> Result<Program, MutationError> {
    cfg.expect("permute_instructions", &[Technique::Permute])?;
    let mut rng = SeededRng::new(cfg.seed);
    let subs = p
        .subroutines()
        .iter()
        .map(|s| permute_subroutine(s, cfg.density(), &mut rng))
        .collect();
    Ok(p.with_subroutines(subs))
}
