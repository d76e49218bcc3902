use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::register::Register;

/// Violations of the model invariants when building values by hand.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid mnemonic `{0}`")]
    InvalidMnemonic(String),
    #[error("instruction has {0} operands, at most 3 allowed")]
    TooManyOperands(usize),
    #[error("invalid memory operand: {0}")]
    InvalidMemory(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("label `{name}` at position {position} is past the end of a {len}-instruction body")]
    LabelOutOfRange {
        name: String,
        position: usize,
        len: usize,
    },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("duplicate subroutine `{0}`")]
    DuplicateSubroutine(String),
    #[error("program has no subroutines")]
    EmptyProgram,
}

/// Lowercase opcode name; the histogram bin key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Mnemonic(String);

impl Mnemonic {
    pub fn new(token: &str) -> Result<Mnemonic, ModelError> {
        let lower = token.to_ascii_lowercase();
        let mut chars = lower.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.');
        if ok {
            Ok(Mnemonic(lower))
        } else {
            Err(ModelError::InvalidMnemonic(token.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Mnemonic {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Mnemonic::new(&value)
    }
}

impl From<Mnemonic> for String {
    fn from(m: Mnemonic) -> String {
        m.0
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Mnemonic {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Mnemonic {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PtrSize {
    Byte,
    Word,
    Dword,
}

impl PtrSize {
    pub fn keyword(self) -> &'static str {
        match self {
            PtrSize::Byte => "byte",
            PtrSize::Word => "word",
            PtrSize::Dword => "dword",
        }
    }
}

/// `[base+index*scale+disp]`, optionally prefixed with `dword ptr` and friends.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MemoryOperand {
    size: Option<PtrSize>,
    base: Register,
    index: Option<(Register, u8)>,
    displacement: i64,
}

impl MemoryOperand {
    pub fn new(
        size: Option<PtrSize>,
        base: Register,
        index: Option<(Register, u8)>,
        displacement: i64,
    ) -> Result<MemoryOperand, ModelError> {
        use super::register::{Gpr, Width};
        if base.width() != Width::Dword {
            return Err(ModelError::InvalidMemory(format!(
                "base register `{base}` is not 32-bit"
            )));
        }
        if let Some((reg, scale)) = index {
            if reg.width() != Width::Dword {
                return Err(ModelError::InvalidMemory(format!(
                    "index register `{reg}` is not 32-bit"
                )));
            }
            if reg.gpr() == Gpr::Esp {
                return Err(ModelError::InvalidMemory("esp cannot be an index".into()));
            }
            if ![1, 2, 4, 8].contains(&scale) {
                return Err(ModelError::InvalidMemory(format!("scale {scale}")));
            }
        }
        Ok(MemoryOperand {
            size,
            base,
            index,
            displacement,
        })
    }

    pub fn size(&self) -> Option<PtrSize> {
        self.size
    }

    pub fn base(&self) -> Register {
        self.base
    }

    pub fn index(&self) -> Option<(Register, u8)> {
        self.index
    }

    pub fn displacement(&self) -> i64 {
        self.displacement
    }

    /// Registers used to form the address.
    pub fn address_registers(&self) -> impl Iterator<Item = Register> + '_ {
        std::iter::once(self.base).chain(self.index.map(|(r, _)| r))
    }

    pub(crate) fn map_registers(&self, f: &mut impl FnMut(Register) -> Register) -> MemoryOperand {
        MemoryOperand {
            size: self.size,
            base: f(self.base),
            index: self.index.map(|(r, s)| (f(r), s)),
            displacement: self.displacement,
        }
    }
}

impl fmt::Display for MemoryOperand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(size) = self.size {
            write!(f, "{} ptr ", size.keyword())?;
        }
        write!(f, "[{}", self.base)?;
        match self.index {
            Some((reg, 1)) => write!(f, "+{reg}")?,
            Some((reg, scale)) => write!(f, "+{reg}*{scale}")?,
            None => {}
        }
        match self.displacement {
            0 => {}
            d if d < 0 => write!(f, "-{}", d.unsigned_abs())?,
            d => write!(f, "+{d}")?,
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Register(Register),
    Immediate(i64),
    Memory(MemoryOperand),
    Label(String),
}

impl Operand {
    pub fn as_register(&self) -> Option<Register> {
        match self {
            Operand::Register(r) => Some(*r),
            _ => None,
        }
    }

    /// Every register named by the operand, including address registers.
    pub fn registers(&self) -> Vec<Register> {
        match self {
            Operand::Register(r) => vec![*r],
            Operand::Memory(m) => m.address_registers().collect(),
            Operand::Immediate(_) | Operand::Label(_) => Vec::new(),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Register(r) => write!(f, "{r}"),
            Operand::Immediate(v) => write!(f, "{v}"),
            Operand::Memory(m) => write!(f, "{m}"),
            Operand::Label(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    mnemonic: Mnemonic,
    operands: Vec<Operand>,
}

impl Instruction {
    pub fn new(mnemonic: Mnemonic, operands: Vec<Operand>) -> Result<Instruction, ModelError> {
        if operands.len() > 3 {
            return Err(ModelError::TooManyOperands(operands.len()));
        }
        Ok(Instruction { mnemonic, operands })
    }

    pub fn mnemonic(&self) -> &Mnemonic {
        &self.mnemonic
    }

    pub fn operands(&self) -> &[Operand] {
        &self.operands
    }

    pub(crate) fn map_registers(&self, mut f: impl FnMut(Register) -> Register) -> Instruction {
        let operands = self
            .operands
            .iter()
            .map(|op| match op {
                Operand::Register(r) => Operand::Register(f(*r)),
                Operand::Memory(m) => Operand::Memory(m.map_registers(&mut f)),
                other => other.clone(),
            })
            .collect();
        Instruction {
            mnemonic: self.mnemonic.clone(),
            operands,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic.as_str())?;
        for (i, op) in self.operands.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

/// A jump target inside a subroutine body, attached to the instruction at `position`
/// (or to the end of the body when `position == body.len()`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    pub name: String,
    pub position: usize,
}

/// Either a label or an instruction, in listing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Label(String),
    Instruction(Instruction),
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let ident_start = |c: char| c.is_ascii_alphabetic() || matches!(c, '_' | '.' | '$' | '@' | '?');
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if ident_start(c))
        && chars.all(|c| ident_start(c) || c.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subroutine {
    name: String,
    body: Vec<Instruction>,
    labels: Vec<Label>,
}

impl Subroutine {
    pub fn new(
        name: impl Into<String>,
        body: Vec<Instruction>,
        labels: Vec<Label>,
    ) -> Result<Subroutine, ModelError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(ModelError::InvalidName(name));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !is_identifier(&label.name) {
                return Err(ModelError::InvalidName(label.name.clone()));
            }
            if label.position > body.len() {
                return Err(ModelError::LabelOutOfRange {
                    name: label.name.clone(),
                    position: label.position,
                    len: body.len(),
                });
            }
            if !seen.insert(label.name.as_str()) {
                return Err(ModelError::DuplicateLabel(label.name.clone()));
            }
        }
        let mut labels = labels;
        labels.sort_by_key(|l| l.position);
        Ok(Subroutine { name, body, labels })
    }

    pub fn from_statements(
        name: impl Into<String>,
        statements: Vec<Statement>,
    ) -> Result<Subroutine, ModelError> {
        let mut body = Vec::new();
        let mut labels = Vec::new();
        for st in statements {
            match st {
                Statement::Label(name) => labels.push(Label {
                    name,
                    position: body.len(),
                }),
                Statement::Instruction(i) => body.push(i),
            }
        }
        Subroutine::new(name, body, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn body(&self) -> &[Instruction] {
        &self.body
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn has_label_at(&self, position: usize) -> bool {
        self.labels.iter().any(|l| l.position == position)
    }

    /// Labels and instructions interleaved in listing order.
    pub fn statements(&self) -> Vec<Statement> {
        let mut out = Vec::with_capacity(self.body.len() + self.labels.len());
        let mut labels = self.labels.iter().peekable();
        for (i, instr) in self.body.iter().enumerate() {
            while let Some(l) = labels.next_if(|l| l.position == i) {
                out.push(Statement::Label(l.name.clone()));
            }
            out.push(Statement::Instruction(instr.clone()));
        }
        out.extend(labels.map(|l| Statement::Label(l.name.clone())));
        out
    }

    /// Replaces the instruction list, keeping labels in place. `body` must keep the length.
    pub(crate) fn with_body(&self, body: Vec<Instruction>) -> Subroutine {
        debug_assert_eq!(body.len(), self.body.len());
        Subroutine {
            name: self.name.clone(),
            body,
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    id: String,
    subroutines: Vec<Subroutine>,
}

impl Program {
    pub fn new(id: impl Into<String>, subroutines: Vec<Subroutine>) -> Result<Program, ModelError> {
        if subroutines.is_empty() {
            return Err(ModelError::EmptyProgram);
        }
        let mut seen = HashSet::new();
        for s in &subroutines {
            if !seen.insert(s.name()) {
                return Err(ModelError::DuplicateSubroutine(s.name().to_string()));
            }
        }
        Ok(Program {
            id: id.into(),
            subroutines,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn subroutines(&self) -> &[Subroutine] {
        &self.subroutines
    }

    pub fn subroutine(&self, name: &str) -> Option<&Subroutine> {
        self.subroutines.iter().find(|s| s.name == name)
    }

    /// Names of subroutines with no instructions; these carry no histogram.
    pub fn empty_subroutines(&self) -> Vec<&str> {
        self.subroutines
            .iter()
            .filter(|s| s.is_empty())
            .map(|s| s.name())
            .collect()
    }

    pub fn instruction_count(&self) -> usize {
        self.subroutines.iter().map(|s| s.body.len()).sum()
    }

    pub fn with_id(&self, id: impl Into<String>) -> Program {
        Program {
            id: id.into(),
            subroutines: self.subroutines.clone(),
        }
    }

    /// Swaps in a new subroutine list. The names must stay pairwise distinct.
    pub(crate) fn with_subroutines(&self, subroutines: Vec<Subroutine>) -> Program {
        Program::new(self.id.clone(), subroutines).expect("subroutine set preserved")
    }
}
