use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::asm::{parse_operand, Instruction, Mnemonic, Operand, Program, Register, Subroutine};
use crate::histogram::content_digest;
use crate::rng::SeededRng;

use super::{MutationConfig, MutationError, Technique};

/// An operand slot in a rule: either a fixed operand or a `%name` placeholder
/// that binds any register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperandTemplate {
    Exact(Operand),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrTemplate {
    mnemonic: Mnemonic,
    operands: Vec<OperandTemplate>,
}

pub type Bindings = BTreeMap<String, Register>;

impl InstrTemplate {
    /// `mnemonic op, %var, ...`
    pub fn parse(text: &str) -> Result<InstrTemplate, String> {
        let text = text.trim();
        let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let mnemonic = Mnemonic::new(head).map_err(|e| e.to_string())?;
        let mut operands = Vec::new();
        for op in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            operands.push(match op.strip_prefix('%') {
                Some(var) if !var.is_empty() && var.chars().all(|c| c.is_ascii_alphanumeric()) => {
                    OperandTemplate::Var(var.to_string())
                }
                Some(_) => return Err(format!("bad placeholder `{op}`")),
                None => OperandTemplate::Exact(parse_operand(op)?),
            });
        }
        if operands.len() > 3 {
            return Err("more than three operands".into());
        }
        Ok(InstrTemplate { mnemonic, operands })
    }

    fn vars(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(|o| match o {
            OperandTemplate::Var(v) => Some(v.as_str()),
            OperandTemplate::Exact(_) => None,
        })
    }

    fn matches(&self, instr: &Instruction, bindings: &mut Bindings) -> bool {
        if instr.mnemonic() != &self.mnemonic || instr.operands().len() != self.operands.len() {
            return false;
        }
        for (slot, op) in self.operands.iter().zip(instr.operands()) {
            match slot {
                OperandTemplate::Exact(expected) => {
                    if expected != op {
                        return false;
                    }
                }
                OperandTemplate::Var(v) => {
                    let Some(reg) = op.as_register() else {
                        return false;
                    };
                    if *bindings.entry(v.clone()).or_insert(reg) != reg {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn instantiate(&self, bindings: &Bindings) -> Instruction {
        let operands = self
            .operands
            .iter()
            .map(|slot| match slot {
                OperandTemplate::Exact(op) => op.clone(),
                OperandTemplate::Var(v) => Operand::Register(bindings[v]),
            })
            .collect();
        Instruction::new(self.mnemonic.clone(), operands).expect("template arity checked")
    }
}

impl fmt::Display for InstrTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic.as_str())?;
        for (i, op) in self.operands.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            match op {
                OperandTemplate::Exact(o) => write!(f, "{o}")?,
                OperandTemplate::Var(v) => write!(f, "%{v}")?,
            }
        }
        Ok(())
    }
}

/// Rewrites an instruction sequence into an equivalent one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionRule {
    name: String,
    pattern: Vec<InstrTemplate>,
    replacement: Vec<InstrTemplate>,
}

impl SubstitutionRule {
    /// Pattern and replacement are `;`-separated instruction templates.
    pub fn parse(name: &str, pattern: &str, replacement: &str) -> Result<SubstitutionRule, MutationError> {
        let invalid = |reason: String| MutationError::InvalidRule {
            rule: name.to_string(),
            reason,
        };
        let seq = |text: &str| {
            text.split(';')
                .map(InstrTemplate::parse)
                .collect::<Result<Vec<_>, _>>()
                .map_err(invalid)
        };
        SubstitutionRule::new(name, seq(pattern)?, seq(replacement)?)
    }

    pub fn new(
        name: &str,
        pattern: Vec<InstrTemplate>,
        replacement: Vec<InstrTemplate>,
    ) -> Result<SubstitutionRule, MutationError> {
        let invalid = |reason: &str| MutationError::InvalidRule {
            rule: name.to_string(),
            reason: reason.to_string(),
        };
        if pattern.is_empty() || replacement.is_empty() {
            return Err(invalid("pattern and replacement must be non-empty"));
        }
        let bound: BTreeSet<&str> = pattern.iter().flat_map(InstrTemplate::vars).collect();
        if replacement
            .iter()
            .flat_map(InstrTemplate::vars)
            .any(|v| !bound.contains(v))
        {
            return Err(invalid("replacement uses a placeholder the pattern does not bind"));
        }
        Ok(SubstitutionRule {
            name: name.to_string(),
            pattern,
            replacement,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pattern(&self) -> &[InstrTemplate] {
        &self.pattern
    }

    pub fn replacement(&self) -> &[InstrTemplate] {
        &self.replacement
    }

    /// Bindings if the pattern matches `body` starting at `at`.
    pub fn match_at(&self, body: &[Instruction], at: usize) -> Option<Bindings> {
        let window = body.get(at..at + self.pattern.len())?;
        let mut bindings = Bindings::new();
        self.pattern
            .iter()
            .zip(window)
            .all(|(t, i)| t.matches(i, &mut bindings))
            .then_some(bindings)
    }

    pub fn instantiate(&self, bindings: &Bindings) -> Vec<Instruction> {
        self.replacement.iter().map(|t| t.instantiate(bindings)).collect()
    }
}

impl fmt::Display for SubstitutionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |seq: &[InstrTemplate]| {
            seq.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        };
        write!(f, "{}: {} => {}", self.name, join(&self.pattern), join(&self.replacement))
    }
}

/// The shipped equivalences:
///
/// * register zeroing: `mov %r, 0`, `xor %r, %r`, `and %r, 0`, `sub %r, %r`, each into each
/// * `test %r, %r` and `or %r, %r`, both ways
/// * `mov ebp, esp` and `push esp; pop ebp`, both ways
pub fn default_rulebook() -> Vec<SubstitutionRule> {
    let zeroing = [
        ("mov", "mov %r, 0"),
        ("xor", "xor %r, %r"),
        ("and", "and %r, 0"),
        ("sub", "sub %r, %r"),
    ];
    let mut rules = Vec::new();
    for (from_name, from) in zeroing {
        for (to_name, to) in zeroing {
            if from_name != to_name {
                let name = format!("zero-{from_name}-to-{to_name}");
                rules.push(SubstitutionRule::parse(&name, from, to).expect("static rule"));
            }
        }
    }
    let pairs = [
        ("test-to-or", "test %r, %r", "or %r, %r"),
        ("or-to-test", "or %r, %r", "test %r, %r"),
        ("frame-mov-to-push-pop", "mov ebp, esp", "push esp; pop ebp"),
        ("frame-push-pop-to-mov", "push esp; pop ebp", "mov ebp, esp"),
    ];
    for (name, from, to) in pairs {
        rules.push(SubstitutionRule::parse(name, from, to).expect("static rule"));
    }
    rules
}

/// Digest of the rulebook's canonical text, one rule per line.
pub fn rulebook_digest(rules: &[SubstitutionRule]) -> String {
    let text: String = rules.iter().map(|r| format!("{r}\n")).collect();
    content_digest(text.as_bytes())
}

/// Rewrites one subroutine. `choose` gets the body, a site and the rules that
/// apply there, and returns the one to fire, if any.
fn rewrite(
    sub: &Subroutine,
    rules: &[SubstitutionRule],
    mut choose: impl FnMut(usize, &[&SubstitutionRule]) -> Option<usize>,
) -> Subroutine {
    let body = sub.body();
    let mut out = Vec::with_capacity(body.len());
    let mut new_position = vec![0; body.len() + 1];
    let mut i = 0;
    while i < body.len() {
        new_position[i] = out.len();
        let applicable: Vec<(&SubstitutionRule, Bindings)> = rules
            .iter()
            .filter(|r| (i + 1..i + r.pattern.len()).all(|p| !sub.has_label_at(p)))
            .filter_map(|r| r.match_at(body, i).map(|b| (r, b)))
            .collect();
        let refs: Vec<&SubstitutionRule> = applicable.iter().map(|(r, _)| *r).collect();
        match choose(i, &refs) {
            Some(k) => {
                let (rule, bindings) = &applicable[k];
                out.extend(rule.instantiate(bindings));
                i += rule.pattern.len();
            }
            None => {
                out.push(body[i].clone());
                i += 1;
            }
        }
    }
    new_position[body.len()] = out.len();
    let labels = sub
        .labels()
        .iter()
        .map(|l| crate::asm::Label {
            name: l.name.clone(),
            position: new_position[l.position],
        })
        .collect();
    Subroutine::new(sub.name(), out, labels).expect("labels remapped in range")
}

/// Fires `rule` at instruction `index` of `sub`.
pub fn apply_rule_at(
    sub: &Subroutine,
    index: usize,
    rule: &SubstitutionRule,
) -> Result<Subroutine, MutationError> {
    let mut fired = false;
    let out = rewrite(sub, std::slice::from_ref(rule), |i, rules| {
        (i == index && !rules.is_empty()).then(|| {
            fired = true;
            0
        })
    });
    if fired {
        Ok(out)
    } else {
        Err(MutationError::RuleDoesNotMatch {
            rule: rule.name().to_string(),
            subroutine: sub.name().to_string(),
            index,
        })
    }
}

/// At every site where some rule matches, fires a uniformly chosen applicable
/// rule with probability `density`. Rewritten instructions are not revisited.
pub fn substitute_instructions(p: &Program, cfg: &MutationConfig) -> Result<Program, MutationError> {
    cfg.expect("substitute_instructions", &[Technique::Substitute])?;
    if cfg.rulebook().is_empty() {
        return Err(MutationError::EmptyRulebook);
    }
    let mut rng = SeededRng::new(cfg.seed);
    let subs = p
        .subroutines()
        .iter()
        .map(|s| {
            rewrite(s, cfg.rulebook(), |_, rules| {
                if rules.is_empty() || !rng.chance(cfg.density()) {
                    None
                } else {
                    Some(rng.below(rules.len()))
                }
            })
        })
        .collect();
    Ok(p.with_subroutines(subs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{parse_program, serialize_program};
    use crate::histogram::extract_features;

    fn rule(name: &str) -> SubstitutionRule {
        default_rulebook()
            .into_iter()
            .find(|r| r.name() == name)
            .unwrap()
    }

    fn sub(text: &str) -> Subroutine {
        parse_program(text, "p").unwrap().subroutines()[0].clone()
    }

    #[test]
    fn rulebook_contents() {
        let rules = default_rulebook();
        assert_eq!(rules.len(), 16);
        assert_eq!(
            rule("frame-mov-to-push-pop").to_string(),
            "frame-mov-to-push-pop: mov ebp, esp => push esp; pop ebp"
        );
        assert_eq!(
            rule("zero-xor-to-sub").to_string(),
            "zero-xor-to-sub: xor %r, %r => sub %r, %r"
        );
    }

    #[test]
    fn every_rule_has_a_round_tripping_inverse() {
        let rules = default_rulebook();
        for r in &rules {
            let inverse = rules
                .iter()
                .find(|q| q.pattern == r.replacement && q.replacement == r.pattern)
                .unwrap_or_else(|| panic!("no inverse for {r}"));
            let bindings: Bindings = r
                .pattern
                .iter()
                .flat_map(InstrTemplate::vars)
                .map(|v| (v.to_string(), Register::parse("ecx").unwrap()))
                .collect();
            let original: Vec<Instruction> = r.pattern.iter().map(|t| t.instantiate(&bindings)).collect();
            let s = Subroutine::new("f", original.clone(), vec![]).unwrap();
            let once = apply_rule_at(&s, 0, r).unwrap();
            assert_ne!(once.body(), &original[..]);
            let twice = apply_rule_at(&once, 0, inverse).unwrap();
            assert_eq!(twice.body(), &original[..], "{r}");
        }
    }

    #[test]
    fn placeholders_bind_consistently() {
        let r = rule("test-to-or");
        let s = sub("proc f\n test eax, ebx\n test ecx, ecx\nendp");
        assert!(r.match_at(s.body(), 0).is_none());
        let b = r.match_at(s.body(), 1).unwrap();
        assert_eq!(b["r"].name(), "ecx");
    }

    #[test]
    fn unbound_placeholder_rejected() {
        assert!(matches!(
            SubstitutionRule::parse("bad", "mov %a, 0", "xor %b, %b"),
            Err(MutationError::InvalidRule { .. })
        ));
        assert!(SubstitutionRule::parse("bad", "mov %a, 0", "").is_err());
    }

    #[test]
    fn mov_zero_to_xor() {
        let p = parse_program("proc f\n mov eax, 0\nendp", "p").unwrap();
        let out = apply_rule_at(&p.subroutines()[0], 0, &rule("zero-mov-to-xor")).unwrap();
        assert_eq!(out.body()[0].to_string(), "xor eax, eax");
        let after = Program::new("p", vec![out]).unwrap();
        let features = extract_features(&after).unwrap();
        let h = &features.histograms()[0];
        assert_eq!(h.get("xor"), 1.0);
        assert_eq!(h.get("mov"), 0.0);
    }

    #[test]
    fn mismatched_site_reported() {
        let s = sub("proc f\n mov eax, 1\nendp");
        assert!(matches!(
            apply_rule_at(&s, 0, &rule("zero-mov-to-xor")),
            Err(MutationError::RuleDoesNotMatch { index: 0, .. })
        ));
    }

    #[test]
    fn labels_follow_rewrites() {
        let s = sub("proc f\n mov ebp, esp\nnext:\n xor eax, eax\n jmp next\nendp");
        let out = apply_rule_at(&s, 0, &rule("frame-mov-to-push-pop")).unwrap();
        assert_eq!(out.labels()[0].position, 2);
        assert_eq!(out.body()[2].to_string(), "xor eax, eax");
    }

    #[test]
    fn pattern_never_spans_a_label() {
        let s = sub("proc f\n push esp\nmid:\n pop ebp\nendp");
        assert!(apply_rule_at(&s, 0, &rule("frame-push-pop-to-mov")).is_err());
    }

    #[test]
    fn density_zero_and_empty_rulebook() {
        let p = parse_program("proc f\n xor eax, eax\n test ecx, ecx\nendp", "p").unwrap();
        let cfg = MutationConfig::new(Technique::Substitute, 5, 0.0).unwrap();
        assert_eq!(substitute_instructions(&p, &cfg).unwrap(), p);
        let full = MutationConfig::new(Technique::Substitute, 5, 1.0).unwrap();
        let out = substitute_instructions(&p, &full).unwrap();
        assert_ne!(serialize_program(&out), serialize_program(&p));
        assert_eq!(
            substitute_instructions(&p, &cfg.with_rulebook(vec![])),
            Err(MutationError::EmptyRulebook)
        );
    }
}
