//! Seeded metamorphic mutation engine.
//!
//! Each technique is a pure function of the input program and a
//! [`MutationConfig`]; the same pair always yields the same output.
//!
//! | technique           | histogram effect                       |
//! |---------------------|----------------------------------------|
//! | `garbage`           | adds `add/mov/or/and/push/pop/inc/sub` |
//! | `garbage_nop`       | adds `nop`                             |
//! | `regswap`           | none                                   |
//! | `substitute`        | moves mass between equivalent opcodes  |
//! | `permute`           | none                                   |
//! | `transpose_modules` | none (set order only)                  |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::{ModelError, Program};

mod family;
mod garbage;
mod permute;
mod regswap;
mod substitute;
mod transpose;

pub use family::{make_family, Family, LineageManifest, StepRecord, VariantRecord};
pub use garbage::{insert_garbage, GarbageKind, GARBAGE_REGISTERS};
pub use permute::{can_swap, permute_instructions};
pub use regswap::{random_permutation, swap_registers, RegisterPermutation};
pub use substitute::{
    apply_rule_at, default_rulebook, rulebook_digest, substitute_instructions, Bindings,
    InstrTemplate, OperandTemplate, SubstitutionRule,
};
pub use transpose::transpose_modules;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MutationError {
    #[error("invalid register permutation: {0}")]
    InvalidPermutation(String),
    #[error("substitution rulebook is empty")]
    EmptyRulebook,
    #[error("invalid substitution rule `{rule}`: {reason}")]
    InvalidRule { rule: String, reason: String },
    #[error("rule `{rule}` does not match at instruction {index} of `{subroutine}`")]
    RuleDoesNotMatch {
        rule: String,
        subroutine: String,
        index: usize,
    },
    #[error("density {0} is outside [0, 1]")]
    InvalidDensity(f64),
    #[error("{operation} cannot run technique `{technique}`")]
    WrongTechnique {
        operation: &'static str,
        technique: Technique,
    },
    #[error("a family needs at least one variant")]
    EmptyFamily,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    Garbage,
    GarbageNop,
    Regswap,
    Substitute,
    Permute,
    TransposeModules,
}

impl Technique {
    pub const ALL: [Technique; 6] = [
        Technique::Garbage,
        Technique::GarbageNop,
        Technique::Regswap,
        Technique::Substitute,
        Technique::Permute,
        Technique::TransposeModules,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Garbage => "garbage",
            Technique::GarbageNop => "garbage_nop",
            Technique::Regswap => "regswap",
            Technique::Substitute => "substitute",
            Technique::Permute => "permute",
            Technique::TransposeModules => "transpose_modules",
        }
    }

    /// Techniques whose output has the same multiset of normalized histograms.
    pub fn preserves_histograms(self) -> bool {
        matches!(
            self,
            Technique::Regswap | Technique::Permute | Technique::TransposeModules
        )
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown technique `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationConfig {
    pub seed: u64,
    pub technique: Technique,
    density: f64,
    rulebook: Vec<SubstitutionRule>,
}

impl MutationConfig {
    /// Uses [`default_rulebook`] for substitution.
    pub fn new(technique: Technique, seed: u64, density: f64) -> Result<MutationConfig, MutationError> {
        if !(0.0..=1.0).contains(&density) {
            return Err(MutationError::InvalidDensity(density));
        }
        Ok(MutationConfig {
            seed,
            technique,
            density,
            rulebook: default_rulebook(),
        })
    }

    pub fn with_rulebook(mut self, rulebook: Vec<SubstitutionRule>) -> MutationConfig {
        self.rulebook = rulebook;
        self
    }

    pub fn with_seed(&self, seed: u64) -> MutationConfig {
        MutationConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn rulebook(&self) -> &[SubstitutionRule] {
        &self.rulebook
    }

    fn expect(&self, operation: &'static str, allowed: &[Technique]) -> Result<(), MutationError> {
        if allowed.contains(&self.technique) {
            Ok(())
        } else {
            Err(MutationError::WrongTechnique {
                operation,
                technique: self.technique,
            })
        }
    }
}

/// Runs whichever technique `cfg` names. `regswap` draws its permutation from the seed.
pub fn mutate(p: &Program, cfg: &MutationConfig) -> Result<Program, MutationError> {
    match cfg.technique {
        Technique::Garbage | Technique::GarbageNop => insert_garbage(p, cfg),
        Technique::Regswap => {
            let perm = random_permutation(p, cfg.seed);
            swap_registers(p, &perm)
        }
        Technique::Substitute => substitute_instructions(p, cfg),
        Technique::Permute => permute_instructions(p, cfg),
        Technique::TransposeModules => transpose_modules(p, cfg),
    }
}
