//! Register, flag and memory effects of instructions, as far as instruction
//! permutation needs them.
//!
//! Register sets are reported at parent-register granularity: a write to `dh`
//! is a write to `edx`. Mnemonics missing from the table are treated
//! conservatively: every mentioned register is both read and written, and the
//! instruction reads and writes flags and memory.

use std::collections::BTreeSet;

use super::model::{Instruction, Operand};
use super::register::Gpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Read,
    Write,
    ReadWrite,
}

use Role::{Read as R, ReadWrite as RW, Write as W};

/// Table entry for one (mnemonic, arity) form.
struct Form {
    roles: &'static [Role],
    implicit_reads: &'static [Gpr],
    implicit_writes: &'static [Gpr],
    reads_flags: bool,
    writes_flags: bool,
    /// Implicit stack or memory traffic beyond explicit memory operands.
    reads_memory: bool,
    writes_memory: bool,
}

const fn form(roles: &'static [Role]) -> Form {
    Form {
        roles,
        implicit_reads: &[],
        implicit_writes: &[],
        reads_flags: false,
        writes_flags: false,
        reads_memory: false,
        writes_memory: false,
    }
}

const fn alu(roles: &'static [Role]) -> Form {
    Form {
        writes_flags: true,
        ..form(roles)
    }
}

const CONDITION_CODES: &[&str] = &[
    "a", "ae", "b", "be", "c", "e", "g", "ge", "l", "le", "na", "nae", "nb", "nbe", "nc", "ne",
    "ng", "nge", "nl", "nle", "no", "np", "ns", "nz", "o", "p", "pe", "po", "s", "z",
];

fn is_condition(suffix: &str) -> bool {
    CONDITION_CODES.contains(&suffix)
}

/// Jumps, calls, returns and loops: instructions that can leave straight-line order.
pub fn is_control_transfer(mnemonic: &str) -> bool {
    matches!(
        mnemonic,
        "jmp" | "call" | "ret" | "retn" | "retf" | "iret" | "iretd" | "jcxz" | "jecxz" | "loop"
            | "loope" | "loopne" | "loopz" | "loopnz" | "int" | "int3" | "into" | "hlt"
    ) || mnemonic
        .strip_prefix('j')
        .is_some_and(is_condition)
}

fn lookup(mnemonic: &str, arity: usize) -> Option<Form> {
    use Gpr::*;
    let f = match (mnemonic, arity) {
        ("nop", 0) => form(&[]),
        ("mov" | "movzx" | "movsx" | "lea", 2) => form(&[W, R]),
        ("add" | "sub" | "and" | "or" | "xor", 2) => alu(&[RW, R]),
        ("adc" | "sbb", 2) => Form {
            reads_flags: true,
            ..alu(&[RW, R])
        },
        ("cmp" | "test", 2) => alu(&[R, R]),
        ("inc" | "dec" | "neg", 1) => alu(&[RW]),
        ("not", 1) => form(&[RW]),
        ("shl" | "sal" | "shr" | "sar" | "rol" | "ror", 2) => alu(&[RW, R]),
        ("shl" | "sal" | "shr" | "sar" | "rol" | "ror", 1) => alu(&[RW]),
        ("rcl" | "rcr", 2) => Form {
            reads_flags: true,
            ..alu(&[RW, R])
        },
        ("xchg", 2) => form(&[RW, RW]),
        ("imul", 1) | ("mul", 1) => Form {
            implicit_reads: &[Eax],
            implicit_writes: &[Eax, Edx],
            ..alu(&[R])
        },
        ("imul", 2) => alu(&[RW, R]),
        ("imul", 3) => alu(&[W, R, R]),
        ("div" | "idiv", 1) => Form {
            implicit_reads: &[Eax, Edx],
            implicit_writes: &[Eax, Edx],
            ..alu(&[R])
        },
        ("cdq", 0) => Form {
            implicit_reads: &[Eax],
            implicit_writes: &[Edx],
            ..form(&[])
        },
        ("cwde", 0) => Form {
            implicit_reads: &[Eax],
            implicit_writes: &[Eax],
            ..form(&[])
        },
        ("push", 1) => Form {
            implicit_reads: &[Esp],
            implicit_writes: &[Esp],
            writes_memory: true,
            ..form(&[R])
        },
        ("pop", 1) => Form {
            implicit_reads: &[Esp],
            implicit_writes: &[Esp],
            reads_memory: true,
            ..form(&[W])
        },
        ("pushad" | "pusha", 0) => Form {
            implicit_reads: &[Eax, Ebx, Ecx, Edx, Esi, Edi, Ebp, Esp],
            implicit_writes: &[Esp],
            writes_memory: true,
            ..form(&[])
        },
        ("popad" | "popa", 0) => Form {
            implicit_reads: &[Esp],
            implicit_writes: &[Eax, Ebx, Ecx, Edx, Esi, Edi, Ebp, Esp],
            reads_memory: true,
            ..form(&[])
        },
        ("pushfd" | "pushf", 0) => Form {
            implicit_reads: &[Esp],
            implicit_writes: &[Esp],
            reads_flags: true,
            writes_memory: true,
            ..form(&[])
        },
        ("popfd" | "popf", 0) => Form {
            implicit_reads: &[Esp],
            implicit_writes: &[Esp],
            writes_flags: true,
            reads_memory: true,
            ..form(&[])
        },
        ("leave", 0) => Form {
            implicit_reads: &[Ebp],
            implicit_writes: &[Esp, Ebp],
            reads_memory: true,
            ..form(&[])
        },
        ("clc" | "stc" | "cmc" | "cld" | "std", 0) => Form {
            writes_flags: true,
            reads_flags: mnemonic == "cmc",
            ..form(&[])
        },
        ("jmp", 1) => form(&[R]),
        ("call", 1) => Form {
            implicit_reads: &[Esp],
            implicit_writes: &[Esp, Eax, Ecx, Edx],
            reads_flags: true,
            writes_flags: true,
            reads_memory: true,
            writes_memory: true,
            ..form(&[R])
        },
        ("ret" | "retn", 0 | 1) => Form {
            implicit_reads: &[Esp, Eax],
            implicit_writes: &[Esp],
            reads_memory: true,
            ..form(if arity == 0 { &[] } else { &[R] })
        },
        ("loop", 1) => Form {
            implicit_reads: &[Ecx],
            implicit_writes: &[Ecx],
            ..form(&[R])
        },
        ("jecxz", 1) => Form {
            implicit_reads: &[Ecx],
            ..form(&[R])
        },
        (m, 1) if m.strip_prefix('j').is_some_and(is_condition) => Form {
            reads_flags: true,
            ..form(&[R])
        },
        (m, 1) if m.strip_prefix("set").is_some_and(is_condition) => Form {
            reads_flags: true,
            ..form(&[W])
        },
        (m, 2) if m.strip_prefix("cmov").is_some_and(is_condition) => Form {
            reads_flags: true,
            ..form(&[RW, R])
        },
        _ => return None,
    };
    Some(f)
}

/// Everything an instruction observes or changes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effects {
    pub reads: BTreeSet<Gpr>,
    pub writes: BTreeSet<Gpr>,
    pub reads_flags: bool,
    pub writes_flags: bool,
    pub reads_memory: bool,
    pub writes_memory: bool,
    pub control_transfer: bool,
    /// False when the mnemonic fell through to the conservative fallback.
    pub known: bool,
}

pub fn is_known(instr: &Instruction) -> bool {
    lookup(instr.mnemonic().as_str(), instr.operands().len()).is_some()
}

pub fn effects(instr: &Instruction) -> Effects {
    let mnemonic = instr.mnemonic().as_str();
    let ops = instr.operands();
    let mut fx = Effects {
        control_transfer: is_control_transfer(mnemonic),
        ..Effects::default()
    };

    let Some(form) = lookup(mnemonic, ops.len()) else {
        for op in ops {
            for r in op.registers() {
                fx.reads.insert(r.gpr());
                fx.writes.insert(r.gpr());
            }
        }
        fx.reads_flags = true;
        fx.writes_flags = true;
        fx.reads_memory = true;
        fx.writes_memory = true;
        return fx;
    };

    fx.known = true;
    for (op, role) in ops.iter().zip(form.roles) {
        let reads = matches!(role, Role::Read | Role::ReadWrite);
        let writes = matches!(role, Role::Write | Role::ReadWrite);
        match op {
            Operand::Register(r) => {
                if reads {
                    fx.reads.insert(r.gpr());
                }
                if writes {
                    fx.writes.insert(r.gpr());
                }
            }
            Operand::Memory(m) => {
                fx.reads.extend(m.address_registers().map(|r| r.gpr()));
                // lea only computes the address
                if mnemonic != "lea" {
                    fx.reads_memory |= reads;
                    fx.writes_memory |= writes;
                }
            }
            Operand::Immediate(_) | Operand::Label(_) => {}
        }
    }
    fx.reads.extend(form.implicit_reads);
    fx.writes.extend(form.implicit_writes);
    fx.reads_flags = form.reads_flags;
    fx.writes_flags = form.writes_flags;
    fx.reads_memory |= form.reads_memory;
    fx.writes_memory |= form.writes_memory;
    fx
}

/// Registers whose value the instruction observes, address registers included.
pub fn registers_read(instr: &Instruction) -> BTreeSet<Gpr> {
    effects(instr).reads
}

/// Registers the instruction may change, reported as full 32-bit parents.
pub fn registers_written(instr: &Instruction) -> BTreeSet<Gpr> {
    effects(instr).writes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::parse_instruction;
    use Gpr::*;

    fn rd(s: &str) -> Vec<Gpr> {
        registers_read(&parse_instruction(s).unwrap()).into_iter().collect()
    }

    fn wr(s: &str) -> Vec<Gpr> {
        registers_written(&parse_instruction(s).unwrap()).into_iter().collect()
    }

    #[test]
    fn mov_reads_source_only() {
        assert_eq!(rd("mov eax, ebx"), vec![Ebx]);
        assert_eq!(wr("mov eax, ebx"), vec![Eax]);
    }

    #[test]
    fn add_reads_both() {
        assert_eq!(rd("add esi, ebx"), vec![Ebx, Esi]);
        assert_eq!(wr("add esi, ebx"), vec![Esi]);
    }

    #[test]
    fn memory_base_is_read() {
        assert_eq!(rd("mov [esi], edi"), vec![Esi, Edi]);
        assert_eq!(wr("mov [esi], edi"), Vec::<Gpr>::new());
        assert_eq!(rd("mov ebx, [edx]"), vec![Edx]);
        assert_eq!(rd("lea eax, [ebx+ecx*2+4]"), vec![Ebx, Ecx]);
    }

    #[test]
    fn push_moves_stack_pointer() {
        assert_eq!(wr("push ecx"), vec![Esp]);
        assert_eq!(rd("push ecx"), vec![Ecx, Esp]);
        assert_eq!(wr("pop ebp"), vec![Ebp, Esp]);
    }

    #[test]
    fn subregister_write_reports_parent() {
        assert_eq!(wr("mov dh, 40"), vec![Edx]);
        assert_eq!(rd("mov dh, 40"), Vec::<Gpr>::new());
        assert_eq!(wr("inc al"), vec![Eax]);
    }

    #[test]
    fn unknown_mnemonic_is_conservative() {
        let i = parse_instruction("frobnicate eax, [ebx+ecx]").unwrap();
        let fx = effects(&i);
        assert!(!fx.known);
        assert_eq!(fx.reads, [Eax, Ebx, Ecx].into_iter().collect());
        assert_eq!(fx.writes, [Eax, Ebx, Ecx].into_iter().collect());
        assert!(fx.reads_flags && fx.writes_flags && fx.reads_memory && fx.writes_memory);
    }

    #[test]
    fn flags_and_control() {
        let cmp = effects(&parse_instruction("cmp eax, 1").unwrap());
        assert!(cmp.writes_flags && !cmp.reads_flags);
        let je = effects(&parse_instruction("je 401045").unwrap());
        assert!(je.reads_flags && je.control_transfer);
        assert!(is_control_transfer("ret"));
        assert!(is_control_transfer("jnz"));
        assert!(!is_control_transfer("jam"));
        assert!(!effects(&parse_instruction("mov eax, 1").unwrap()).writes_flags);
    }

    #[test]
    fn implicit_operands() {
        assert_eq!(rd("mul ebx"), vec![Eax, Ebx]);
        assert_eq!(wr("mul ebx"), vec![Eax, Edx]);
        assert_eq!(rd("idiv ecx"), vec![Eax, Ecx, Edx]);
        assert_eq!(wr("cdq"), vec![Edx]);
    }
}
