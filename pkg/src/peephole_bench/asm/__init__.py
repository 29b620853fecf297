"""AArch64 basic-block assembly: model, parser, printer, validator."""
from .isa import Diagnostic, ValidationReport, block_symbols, is_known_mnemonic, validate_block
from .model import (
    AddrMode,
    BasicBlock,
    Branch,
    Call,
    Cond,
    CondBranch,
    Directive,
    ExtendedReg,
    Imm,
    Instruction,
    Label,
    LabelRef,
    Mem,
    MemIndex,
    ParseError,
    Reg,
    Register,
    RegKind,
    Ret,
    Shift,
    ShiftedReg,
    gpr,
    parse_register,
)
from .parser import parse_block, parse_instruction, try_parse
from .printer import format_instruction, format_operand, print_block


def canonicalize(text: str) -> str:
    """parse + print; raises ParseError for unparseable text."""
    return print_block(parse_block(text))
