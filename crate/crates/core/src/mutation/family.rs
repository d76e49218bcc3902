use serde::{Deserialize, Serialize};

use crate::asm::{serialize_program, Program};
use crate::histogram::content_digest;

use super::substitute::rulebook_digest;
use super::{mutate, MutationConfig, MutationError, Technique};

pub const LINEAGE_FORMAT: &str = "opfreq-lineage/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub technique: Technique,
    pub seed: u64,
    pub density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rulebook_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub id: String,
    /// Offset added to every step's configured seed.
    pub seed_offset: u64,
    pub digest: String,
    pub steps: Vec<StepRecord>,
}

/// How each variant of a family was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageManifest {
    pub format: String,
    pub base_id: String,
    pub base_digest: String,
    pub variants: Vec<VariantRecord>,
}

impl LineageManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub variants: Vec<Program>,
    pub manifest: LineageManifest,
}

/// Produces `n` variants of `base`, ids `<base>-v1` .. `<base>-v<n>`.
///
/// Variant `k` (1-based) applies every config in order, each with seed
/// `config.seed + k` (wrapping).
pub fn make_family(
    base: &Program,
    n: usize,
    techniques: &[MutationConfig],
) -> Result<Family, MutationError> {
    if n == 0 {
        return Err(MutationError::EmptyFamily);
    }
    let mut variants = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for k in 1..=n {
        let offset = k as u64;
        let mut current = base.clone();
        let mut steps = Vec::with_capacity(techniques.len());
        for cfg in techniques {
            let cfg = cfg.with_seed(cfg.seed.wrapping_add(offset));
            current = mutate(&current, &cfg)?;
            steps.push(StepRecord {
                technique: cfg.technique,
                seed: cfg.seed,
                density: cfg.density(),
                rulebook_digest: (cfg.technique == Technique::Substitute)
                    .then(|| rulebook_digest(cfg.rulebook())),
            });
        }
        let variant = current.with_id(format!("{}-v{k}", base.id()));
        records.push(VariantRecord {
            id: variant.id().to_string(),
            seed_offset: offset,
            digest: content_digest(serialize_program(&variant).as_bytes()),
            steps,
        });
        variants.push(variant);
    }
    Ok(Family {
        variants,
        manifest: LineageManifest {
            format: LINEAGE_FORMAT.to_string(),
            base_id: base.id().to_string(),
            base_digest: content_digest(serialize_program(base).as_bytes()),
            variants: records,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::parse_program;

    fn base() -> Program {
        parse_program(
            "proc f\n mov eax, 1\n mov ebx, 2\n add ecx, edx\nendp\nproc g\n xor eax, eax\n ret\nendp",
            "base",
        )
        .unwrap()
    }

    #[test]
    fn single_variant_without_techniques_is_the_base() {
        let fam = make_family(&base(), 1, &[]).unwrap();
        assert_eq!(fam.variants.len(), 1);
        assert_eq!(fam.variants[0].subroutines(), base().subroutines());
        assert_eq!(fam.variants[0].id(), "base-v1");
        assert_eq!(fam.manifest.variants[0].digest, fam.manifest.base_digest);
    }

    #[test]
    fn zero_variants_rejected() {
        assert_eq!(make_family(&base(), 0, &[]), Err(MutationError::EmptyFamily));
    }

    #[test]
    fn manifest_records_steps() {
        let cfgs = [
            MutationConfig::new(Technique::Regswap, 10, 0.0).unwrap(),
            MutationConfig::new(Technique::Substitute, 20, 0.5).unwrap(),
        ];
        let fam = make_family(&base(), 3, &cfgs).unwrap();
        let v2 = &fam.manifest.variants[1];
        assert_eq!(v2.id, "base-v2");
        assert_eq!(v2.steps[0].seed, 12);
        assert_eq!(v2.steps[1].seed, 22);
        assert!(v2.steps[0].rulebook_digest.is_none());
        assert!(v2.steps[1].rulebook_digest.as_deref().unwrap().starts_with("sha256:"));
        let again = make_family(&base(), 3, &cfgs).unwrap();
        assert_eq!(again, fam);
        assert_eq!(again.manifest.to_json(), fam.manifest.to_json());
    }
}
