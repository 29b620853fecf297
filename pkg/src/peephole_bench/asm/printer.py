"""BasicBlock -> canonical text."""
from __future__ import annotations

from .model import (
    AddrMode,
    BasicBlock,
    Cond,
    Directive,
    ExtendedReg,
    Imm,
    Instruction,
    Label,
    LabelRef,
    Mem,
    Reg,
    Shift,
    ShiftedReg,
)


def format_label_ref(ref: LabelRef) -> str:
    return f":{ref.modifier}:{ref.name}" if ref.modifier else ref.name


def format_operand(op) -> str:
    if isinstance(op, Reg):
        return op.reg.name
    if isinstance(op, Imm):
        return f"#{op.text}"
    if isinstance(op, ShiftedReg):
        return f"{op.reg.name}, {op.shift} #{op.amount}"
    if isinstance(op, ExtendedReg):
        suffix = f" #{op.amount}" if op.amount is not None else ""
        return f"{op.reg.name}, {op.extend}{suffix}"
    if isinstance(op, Shift):
        return f"{op.shift} #{op.amount}"
    if isinstance(op, LabelRef):
        return format_label_ref(op)
    if isinstance(op, Cond):
        return op.code
    if isinstance(op, Mem):
        return _format_mem(op)
    raise TypeError(f"unknown operand {op!r}")


def _format_mem(mem: Mem) -> str:
    fields = [mem.base.name]
    if mem.index is not None:
        fields.append(mem.index.reg.name)
        if mem.index.op is not None:
            spec = mem.index.op
            if mem.index.amount is not None:
                spec += f" #{mem.index.amount}"
            fields.append(spec)
    offset = None
    if isinstance(mem.offset, Imm):
        offset = f"#{mem.offset.text}"
    elif isinstance(mem.offset, LabelRef):
        offset = format_label_ref(mem.offset)
    if mem.mode is AddrMode.POST_INDEX:
        return f"[{', '.join(fields)}], {offset}"
    if offset is not None:
        fields.append(offset)
    text = f"[{', '.join(fields)}]"
    return text + "!" if mem.mode is AddrMode.PRE_INDEX else text


def format_instruction(instr: Instruction) -> str:
    if not instr.operands:
        return instr.mnemonic
    return f"{instr.mnemonic} {', '.join(format_operand(op) for op in instr.operands)}"


def format_item(item) -> str:
    if isinstance(item, Instruction):
        return format_instruction(item)
    if isinstance(item, Label):
        return f"{item.name}:"
    if isinstance(item, Directive):
        return item.text
    raise TypeError(f"unknown block item {item!r}")


def print_block(block: BasicBlock) -> str:
    return "\n".join(format_item(it) for it in block.items)
