//! The `.oasm` listing grammar.
//!
//! ```text
//! ; comment
//! proc name
//!     mnemonic op1, op2, op3
//! label:
//!     ...
//! endp
//! ```
//!
//! Operands are registers from [`REGISTER_TABLE`](super::REGISTER_TABLE), immediates
//! (decimal, `0x` hex or trailing-`h` hex), memory references of the form
//! `[reg]`, `[reg+disp]`, `[reg+reg*scale+disp]` with an optional `byte/word/dword ptr`
//! prefix, and label names. Mnemonics, registers and the `proc`/`endp` keywords are
//! case-insensitive; subroutine and label names keep their case.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::model::{
    is_identifier, Instruction, Label, MemoryOperand, Mnemonic, ModelError, Operand, Program,
    PtrSize, Subroutine,
};
use super::register::Register;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: duplicate subroutine `{name}`")]
    DuplicateSubroutine { line: usize, name: String },
    #[error("line {line}: instruction outside of a proc/endp block")]
    OrphanInstruction { line: usize },
    #[error("listing defines no subroutines")]
    NoSubroutines,
}

impl ParseError {
    fn syntax(line: usize, reason: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line,
            reason: reason.into(),
        }
    }
}

struct OpenBlock {
    name: String,
    line: usize,
    body: Vec<Instruction>,
    labels: Vec<Label>,
}

/// Parses a listing into a [`Program`] with the given id.
pub fn parse_program(text: &str, id: &str) -> Result<Program, ParseError> {
    let mut subroutines = Vec::new();
    let mut names = HashSet::new();
    let mut open: Option<OpenBlock> = None;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        if !raw.is_ascii() {
            return Err(ParseError::syntax(line_no, "non-ASCII character"));
        }
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or_default();

        if head.eq_ignore_ascii_case("proc") {
            let name = match (words.next(), words.next()) {
                (Some(name), None) if is_identifier(name) => name,
                _ => return Err(ParseError::syntax(line_no, "expected `proc <name>`")),
            };
            if let Some(b) = &open {
                return Err(ParseError::syntax(
                    line_no,
                    format!("nested proc inside `{}` (opened on line {})", b.name, b.line),
                ));
            }
            if !names.insert(name.to_string()) {
                return Err(ParseError::DuplicateSubroutine {
                    line: line_no,
                    name: name.to_string(),
                });
            }
            open = Some(OpenBlock {
                name: name.to_string(),
                line: line_no,
                body: Vec::new(),
                labels: Vec::new(),
            });
            continue;
        }

        if head.eq_ignore_ascii_case("endp") {
            if words.next().is_some() {
                return Err(ParseError::syntax(line_no, "unexpected text after `endp`"));
            }
            let b = open
                .take()
                .ok_or_else(|| ParseError::syntax(line_no, "`endp` without matching `proc`"))?;
            let sub = Subroutine::new(b.name, b.body, b.labels)
                .map_err(|e| ParseError::syntax(line_no, e.to_string()))?;
            subroutines.push(sub);
            continue;
        }

        if let Some(name) = line.strip_suffix(':') {
            if !is_identifier(name) {
                return Err(ParseError::syntax(line_no, format!("bad label `{name}`")));
            }
            let b = open
                .as_mut()
                .ok_or_else(|| ParseError::syntax(line_no, "label outside of a proc/endp block"))?;
            if b.labels.iter().any(|l| l.name == name) {
                return Err(ParseError::syntax(line_no, format!("duplicate label `{name}`")));
            }
            b.labels.push(Label {
                name: name.to_string(),
                position: b.body.len(),
            });
            continue;
        }

        let instr = parse_instruction(line).map_err(|reason| ParseError::syntax(line_no, reason))?;
        match open.as_mut() {
            Some(b) => b.body.push(instr),
            None => return Err(ParseError::OrphanInstruction { line: line_no }),
        }
    }

    if let Some(b) = open {
        return Err(ParseError::syntax(
            b.line,
            format!("proc `{}` is never closed", b.name),
        ));
    }
    Program::new(id, subroutines).map_err(|e| match e {
        ModelError::EmptyProgram => ParseError::NoSubroutines,
        other => ParseError::syntax(0, other.to_string()),
    })
}

/// Parses a single instruction line (no comment, no label).
pub fn parse_instruction(line: &str) -> Result<Instruction, String> {
    let line = line.trim();
    let split = line
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '.'))
        .unwrap_or(line.len());
    let (head, rest) = line.split_at(split);
    if !rest.is_empty() && !rest.starts_with(|c: char| c.is_ascii_whitespace() || c == '[') {
        return Err(format!("unexpected character after mnemonic in `{line}`"));
    }
    let mnemonic = Mnemonic::new(head).map_err(|e| e.to_string())?;
    let rest = rest.trim();
    let operands = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|s| parse_operand(s.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    Instruction::new(mnemonic, operands).map_err(|e| e.to_string())
}

pub(crate) fn parse_operand(text: &str) -> Result<Operand, String> {
    if text.is_empty() {
        return Err("empty operand".into());
    }
    let lower = text.to_ascii_lowercase();
    for size in [PtrSize::Byte, PtrSize::Word, PtrSize::Dword] {
        if let Some(rest) = lower.strip_prefix(size.keyword()) {
            if let Some(rest) = rest.trim_start().strip_prefix("ptr") {
                let rest = rest.trim_start();
                if rest.starts_with('[') {
                    return parse_memory(rest, Some(size)).map(Operand::Memory);
                }
                return Err(format!("`{text}`: `ptr` must be followed by a memory reference"));
            }
        }
    }
    if text.starts_with('[') {
        return parse_memory(text, None).map(Operand::Memory);
    }
    if let Some(reg) = Register::parse(text) {
        return Ok(Operand::Register(reg));
    }
    if text.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+') {
        return parse_number(text).map(Operand::Immediate);
    }
    if is_identifier(text) {
        return Ok(Operand::Label(text.to_string()));
    }
    Err(format!("unrecognised operand `{text}`"))
}

/// Decimal, `0x..` or `..h` hex, with an optional sign.
pub(crate) fn parse_number(text: &str) -> Result<i64, String> {
    let (negative, body) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    if !body.starts_with(|c: char| c.is_ascii_digit()) {
        return Err(format!("bad number `{text}`"));
    }
    let parsed = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16)
    } else if let Some(hex) = body.strip_suffix('h').or_else(|| body.strip_suffix('H')) {
        i64::from_str_radix(hex, 16)
    } else {
        body.parse::<i64>()
    };
    let value = parsed.map_err(|_| format!("bad number `{text}`"))?;
    Ok(if negative { -value } else { value })
}

fn parse_memory(text: &str, size: Option<PtrSize>) -> Result<MemoryOperand, String> {
    let inner = text
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("unterminated memory operand `{text}`"))?;
    let compact: String = inner.chars().filter(|c| !c.is_ascii_whitespace()).collect();
    if compact.is_empty() {
        return Err("empty memory operand".into());
    }

    // Split into signed terms.
    let mut terms: Vec<(bool, &str)> = Vec::new();
    let mut start = 0;
    let mut negative = false;
    for (i, c) in compact.char_indices() {
        if c == '+' || c == '-' {
            if i == 0 {
                if c == '-' {
                    return Err(format!("`{text}`: address cannot start with `-`"));
                }
            } else {
                terms.push((negative, &compact[start..i]));
            }
            negative = c == '-';
            start = i + 1;
        }
    }
    terms.push((negative, &compact[start..]));

    let mut base: Option<Register> = None;
    let mut index: Option<(Register, u8)> = None;
    let mut displacement: Option<i64> = None;
    for (neg, term) in terms {
        if term.is_empty() {
            return Err(format!("`{text}`: empty address term"));
        }
        if let Some((reg, scale)) = term.split_once('*') {
            let reg = Register::parse(reg).ok_or_else(|| format!("`{text}`: bad index `{reg}`"))?;
            let scale: u8 = scale
                .parse()
                .map_err(|_| format!("`{text}`: bad scale `{scale}`"))?;
            if neg || index.is_some() {
                return Err(format!("`{text}`: unsupported index expression"));
            }
            index = Some((reg, scale));
        } else if let Some(reg) = Register::parse(term) {
            if neg {
                return Err(format!("`{text}`: registers cannot be subtracted"));
            }
            if base.is_none() {
                base = Some(reg);
            } else if index.is_none() {
                index = Some((reg, 1));
            } else {
                return Err(format!("`{text}`: too many registers"));
            }
        } else {
            if displacement.is_some() {
                return Err(format!("`{text}`: more than one displacement"));
            }
            let v = parse_number(term)?;
            displacement = Some(if neg { -v } else { v });
        }
    }
    let base = base.ok_or_else(|| format!("`{text}`: memory operand needs a base register"))?;
    MemoryOperand::new(size, base, index, displacement.unwrap_or(0)).map_err(|e| e.to_string())
}

/// Canonical listing text: lowercase mnemonics, `, ` between operands, decimal
/// immediates, two-space indented instructions, labels flush left, blank line
/// between subroutines.
pub fn serialize_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, sub) in program.subroutines().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_subroutine(&mut out, sub);
    }
    out
}

fn write_subroutine(out: &mut String, sub: &Subroutine) {
    let _ = writeln!(out, "proc {}", sub.name());
    let mut labels = sub.labels().iter().peekable();
    for (i, instr) in sub.body().iter().enumerate() {
        while let Some(l) = labels.next_if(|l| l.position == i) {
            let _ = writeln!(out, "{}:", l.name);
        }
        let _ = writeln!(out, "  {instr}");
    }
    for l in labels {
        let _ = writeln!(out, "{}:", l.name);
    }
    out.push_str("endp\n");
}
