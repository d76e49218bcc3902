use crate::asm::{
    effects, Gpr, Instruction, Mnemonic, Operand, Program, Register, Statement, Subroutine,
};
use crate::rng::SeededRng;

use super::{MutationConfig, MutationError, Technique};

/// Registers garbage may touch. esp and ebp are left alone.
pub const GARBAGE_REGISTERS: [Gpr; 6] = [Gpr::Eax, Gpr::Ebx, Gpr::Ecx, Gpr::Edx, Gpr::Esi, Gpr::Edi];

/// Dead-code snippets: single no-op equivalents and self-cancelling pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GarbageKind {
    /// `add R, 0`
    AddZero,
    /// `mov R, R`
    MovSelf,
    /// `or R, 0`
    OrZero,
    /// `and R, -1`
    AndMinusOne,
    /// `push R; pop R`
    PushPop,
    /// `inc R; sub R, 1`
    IncSub,
    /// `nop`
    Nop,
}

impl GarbageKind {
    pub const REGISTER_FORMS: [GarbageKind; 6] = [
        GarbageKind::AddZero,
        GarbageKind::MovSelf,
        GarbageKind::OrZero,
        GarbageKind::AndMinusOne,
        GarbageKind::PushPop,
        GarbageKind::IncSub,
    ];

    /// Whether the snippet leaves the flags register changed.
    pub fn clobbers_flags(self) -> bool {
        !matches!(self, GarbageKind::MovSelf | GarbageKind::PushPop | GarbageKind::Nop)
    }

    pub fn instructions(self, reg: Gpr) -> Vec<Instruction> {
        let r = Operand::Register(Register::full(reg));
        let imm = Operand::Immediate;
        let i = |m: &str, ops: Vec<Operand>| {
            Instruction::new(Mnemonic::new(m).expect("static mnemonic"), ops)
                .expect("at most two operands")
        };
        match self {
            GarbageKind::AddZero => vec![i("add", vec![r, imm(0)])],
            GarbageKind::MovSelf => vec![i("mov", vec![r.clone(), r])],
            GarbageKind::OrZero => vec![i("or", vec![r, imm(0)])],
            GarbageKind::AndMinusOne => vec![i("and", vec![r, imm(-1)])],
            GarbageKind::PushPop => vec![i("push", vec![r.clone()]), i("pop", vec![r])],
            GarbageKind::IncSub => vec![i("inc", vec![r.clone()]), i("sub", vec![r, imm(1)])],
            GarbageKind::Nop => vec![i("nop", vec![])],
        }
    }
}

/// `live[i]`: flags may be observed at or after instruction `i` before being
/// overwritten. Control transfers count as observers.
fn flag_liveness(body: &[Instruction]) -> Vec<bool> {
    let mut live = vec![false; body.len() + 1];
    for i in (0..body.len()).rev() {
        let fx = effects(&body[i]);
        live[i] = fx.control_transfer || fx.reads_flags || (!fx.writes_flags && live[i + 1]);
    }
    live
}

fn garbage_subroutine(sub: &Subroutine, nop_only: bool, density: f64, rng: &mut SeededRng) -> Subroutine {
    let live = flag_liveness(sub.body());
    let mut out = Vec::new();
    let mut index = 0;
    for st in sub.statements() {
        if let Statement::Instruction(instr) = st {
            if rng.chance(density) {
                let snippet = if nop_only {
                    GarbageKind::Nop.instructions(Gpr::Eax)
                } else {
                    let kinds: Vec<GarbageKind> = GarbageKind::REGISTER_FORMS
                        .into_iter()
                        .filter(|k| !live[index] || !k.clobbers_flags())
                        .collect();
                    let kind = *rng.pick(&kinds);
                    kind.instructions(*rng.pick(&GARBAGE_REGISTERS))
                };
                out.extend(snippet.into_iter().map(Statement::Instruction));
            }
            out.push(Statement::Instruction(instr));
            index += 1;
        } else {
            out.push(st);
        }
    }
    Subroutine::from_statements(sub.name(), out).expect("labels unchanged")
}

/// Inserts dead code before each instruction with probability `density`.
///
/// `garbage` draws from the register forms of [`GarbageKind`], avoiding
/// flag-clobbering forms wherever flags are live; `garbage_nop` inserts `nop`.
pub fn insert_garbage(p: &Program, cfg: &MutationConfig) -> Result<Program, MutationError> {
    cfg.expect("insert_garbage", &[Technique::Garbage, Technique::GarbageNop])?;
    let nop_only = cfg.technique == Technique::GarbageNop;
    let mut rng = SeededRng::new(cfg.seed);
    let subs = p
        .subroutines()
        .iter()
        .map(|s| garbage_subroutine(s, nop_only, cfg.density(), &mut rng))
        .collect();
    Ok(p.with_subroutines(subs))
}
