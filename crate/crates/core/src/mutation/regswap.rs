use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::asm::{Gpr, Program, Width};
use crate::rng::SeededRng;

use super::garbage::GARBAGE_REGISTERS;
use super::MutationError;

/// A bijection over a subset of the general-purpose registers. Registers
/// outside the domain map to themselves; esp is never part of it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegisterPermutation {
    map: BTreeMap<Gpr, Gpr>,
}

impl RegisterPermutation {
    pub fn identity() -> RegisterPermutation {
        RegisterPermutation::default()
    }

    pub fn new(pairs: impl IntoIterator<Item = (Gpr, Gpr)>) -> Result<RegisterPermutation, MutationError> {
        let mut map = BTreeMap::new();
        for (from, to) in pairs {
            if from == Gpr::Esp || to == Gpr::Esp {
                return Err(MutationError::InvalidPermutation("esp cannot be renamed".into()));
            }
            if map.insert(from, to).is_some() {
                return Err(MutationError::InvalidPermutation(format!(
                    "{from} is mapped twice"
                )));
            }
        }
        let domain: BTreeSet<Gpr> = map.keys().copied().collect();
        let image: BTreeSet<Gpr> = map.values().copied().collect();
        if domain != image {
            return Err(MutationError::InvalidPermutation(
                "mapping is not a bijection on its registers".into(),
            ));
        }
        map.retain(|k, v| k != v);
        Ok(RegisterPermutation { map })
    }

    pub fn apply(&self, gpr: Gpr) -> Gpr {
        self.map.get(&gpr).copied().unwrap_or(gpr)
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Gpr, Gpr)> + '_ {
        self.map.iter().map(|(a, b)| (*a, *b))
    }
}

impl fmt::Display for RegisterPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs().map(|(a, b)| format!("{a}={b}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// `edx=eax,edi=ebx,...`
impl FromStr for RegisterPermutation {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |part: &str| MutationError::InvalidPermutation(format!("cannot parse `{part}`"));
        let mut pairs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part.split_once('=').ok_or_else(|| bad(part))?;
            let a = Gpr::parse(a.trim()).ok_or_else(|| bad(part))?;
            let b = Gpr::parse(b.trim()).ok_or_else(|| bad(part))?;
            pairs.push((a, b));
        }
        RegisterPermutation::new(pairs)
    }
}

/// Renames every explicit register occurrence, including memory base/index
/// and sub-registers (`dh` under `edx -> eax` becomes `ah`).
///
/// Implicit operands (e.g. `mul` writing edx) are not renamed.
pub fn swap_registers(p: &Program, perm: &RegisterPermutation) -> Result<Program, MutationError> {
    let mut subs = Vec::with_capacity(p.subroutines().len());
    for sub in p.subroutines() {
        let mut failure = None;
        let body = sub
            .body()
            .iter()
            .map(|instr| {
                instr.map_registers(|r| {
                    let target = perm.apply(r.gpr());
                    r.with_gpr(target).unwrap_or_else(|| {
                        failure.get_or_insert_with(|| {
                            MutationError::InvalidPermutation(format!(
                                "`{r}` has no counterpart in {target}"
                            ))
                        });
                        r
                    })
                })
            })
            .collect();
        if let Some(e) = failure {
            return Err(e);
        }
        subs.push(sub.with_body(body));
    }
    Ok(p.with_subroutines(subs))
}

/// Seeded permutation of eax, ebx, ecx, edx, esi and edi that is valid for `p`.
/// When `p` uses 8-bit registers, eax..edx and esi/edi are permuted separately.
pub fn random_permutation(p: &Program, seed: u64) -> RegisterPermutation {
    let byte_regs = p.subroutines().iter().flat_map(|s| s.body()).any(|i| {
        i.operands().iter().any(|op| {
            op.registers()
                .iter()
                .any(|r| matches!(r.width(), Width::HighByte | Width::LowByte))
        })
    });
    let mut rng = SeededRng::new(seed);
    let groups: Vec<&[Gpr]> = if byte_regs {
        vec![&GARBAGE_REGISTERS[..4], &GARBAGE_REGISTERS[4..]]
    } else {
        vec![&GARBAGE_REGISTERS[..]]
    };
    let mut pairs = Vec::new();
    for group in groups {
        let mut image = group.to_vec();
        rng.shuffle(&mut image);
        pairs.extend(group.iter().copied().zip(image));
    }
    RegisterPermutation::new(pairs).expect("shuffle is a bijection")
}
