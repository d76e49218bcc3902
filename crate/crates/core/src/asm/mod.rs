//! Assembly domain model, the `.oasm` listing parser and per-instruction register effects.

mod model;
mod parse;
mod register;
mod semantics;

pub use model::{
    Instruction, Label, MemoryOperand, Mnemonic, ModelError, Operand, Program, PtrSize, Statement,
    Subroutine,
};
pub use parse::{parse_instruction, parse_program, serialize_program, ParseError};
pub(crate) use parse::parse_operand;
pub use register::{Gpr, Register, Width, REGISTER_TABLE};
pub use semantics::{
    effects, is_control_transfer, is_known, registers_read, registers_written, Effects,
};
