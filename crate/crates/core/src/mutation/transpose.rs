use crate::asm::Program;
use crate::rng::SeededRng;

use super::{MutationConfig, MutationError, Technique};

/// Reorders subroutines with a seeded shuffle. Bodies are untouched.
pub fn transpose_modules(p: &Program, cfg: &MutationConfig) -> Result<Program, MutationError> {
    cfg.expect("transpose_modules", &[Technique::TransposeModules])?;
    let mut subs = p.subroutines().to_vec();
    SeededRng::new(cfg.seed).shuffle(&mut subs);
    Ok(p.with_subroutines(subs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::parse_program;

    #[test]
    fn single_subroutine_unchanged() {
        let p = parse_program("proc f\n nop\nendp", "p").unwrap();
        let cfg = MutationConfig::new(Technique::TransposeModules, 3, 1.0).unwrap();
        assert_eq!(transpose_modules(&p, &cfg).unwrap(), p);
    }

    #[test]
    fn reorders_without_touching_bodies() {
        let p = parse_program(
            "proc f\n mov eax, 1\nendp\nproc g\n push eax\nendp\nproc h\n pop eax\nendp\nproc k\n ret\nendp",
            "p",
        )
        .unwrap();
        let cfg = MutationConfig::new(Technique::TransposeModules, 0, 1.0).unwrap();
        let mut changed = false;
        for seed in 0..10 {
            let out = transpose_modules(&p, &cfg.with_seed(seed)).unwrap();
            for s in out.subroutines() {
                assert_eq!(Some(s), p.subroutine(s.name()));
            }
            changed |= out != p;
        }
        assert!(changed);
    }
}
