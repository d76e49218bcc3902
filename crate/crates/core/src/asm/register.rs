use std::fmt;

use serde::{Deserialize, Serialize};

/// 32-bit general-purpose register. Sub-registers resolve to one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gpr {
    Eax,
    Ebx,
    Ecx,
    Edx,
    Esi,
    Edi,
    Ebp,
    Esp,
}

impl Gpr {
    pub const ALL: [Gpr; 8] = [
        Gpr::Eax,
        Gpr::Ebx,
        Gpr::Ecx,
        Gpr::Edx,
        Gpr::Esi,
        Gpr::Edi,
        Gpr::Ebp,
        Gpr::Esp,
    ];

    pub fn name(self) -> &'static str {
        Register::full(self).name()
    }

    /// eax..edx are the only registers with addressable 8-bit halves.
    pub fn has_byte_parts(self) -> bool {
        matches!(self, Gpr::Eax | Gpr::Ebx | Gpr::Ecx | Gpr::Edx)
    }

    pub fn parse(name: &str) -> Option<Gpr> {
        Register::parse(name)
            .filter(|r| r.width() == Width::Dword)
            .map(|r| r.gpr())
    }
}

impl fmt::Display for Gpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Width {
    Dword,
    Word,
    HighByte,
    LowByte,
}

/// A register operand: a parent GPR viewed at some width (`dh` is edx/HighByte).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Register {
    gpr: Gpr,
    width: Width,
}

/// Every register name the listing grammar accepts.
pub const REGISTER_TABLE: &[(&str, Gpr, Width)] = &[
    ("eax", Gpr::Eax, Width::Dword),
    ("ax", Gpr::Eax, Width::Word),
    ("ah", Gpr::Eax, Width::HighByte),
    ("al", Gpr::Eax, Width::LowByte),
    ("ebx", Gpr::Ebx, Width::Dword),
    ("bx", Gpr::Ebx, Width::Word),
    ("bh", Gpr::Ebx, Width::HighByte),
    ("bl", Gpr::Ebx, Width::LowByte),
    ("ecx", Gpr::Ecx, Width::Dword),
    ("cx", Gpr::Ecx, Width::Word),
    ("ch", Gpr::Ecx, Width::HighByte),
    ("cl", Gpr::Ecx, Width::LowByte),
    ("edx", Gpr::Edx, Width::Dword),
    ("dx", Gpr::Edx, Width::Word),
    ("dh", Gpr::Edx, Width::HighByte),
    ("dl", Gpr::Edx, Width::LowByte),
    ("esi", Gpr::Esi, Width::Dword),
    ("si", Gpr::Esi, Width::Word),
    ("edi", Gpr::Edi, Width::Dword),
    ("di", Gpr::Edi, Width::Word),
    ("ebp", Gpr::Ebp, Width::Dword),
    ("bp", Gpr::Ebp, Width::Word),
    ("esp", Gpr::Esp, Width::Dword),
    ("sp", Gpr::Esp, Width::Word),
];

impl Register {
    /// Returns `None` for combinations that do not exist on x86 (e.g. the high byte of esi).
    pub fn new(gpr: Gpr, width: Width) -> Option<Register> {
        match width {
            Width::HighByte | Width::LowByte if !gpr.has_byte_parts() => None,
            _ => Some(Register { gpr, width }),
        }
    }

    pub fn full(gpr: Gpr) -> Register {
        Register {
            gpr,
            width: Width::Dword,
        }
    }

    /// Case-insensitive lookup in [`REGISTER_TABLE`].
    pub fn parse(name: &str) -> Option<Register> {
        REGISTER_TABLE
            .iter()
            .find(|(n, _, _)| n.eq_ignore_ascii_case(name))
            .map(|&(_, gpr, width)| Register { gpr, width })
    }

    pub fn name(self) -> &'static str {
        REGISTER_TABLE
            .iter()
            .find(|(_, g, w)| *g == self.gpr && *w == self.width)
            .map(|(n, _, _)| *n)
            .expect("register constructed outside the table")
    }

    pub fn gpr(self) -> Gpr {
        self.gpr
    }

    pub fn width(self) -> Width {
        self.width
    }

    /// Same view of a different parent register, if that view exists.
    pub fn with_gpr(self, gpr: Gpr) -> Option<Register> {
        Register::new(gpr, self.width)
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
