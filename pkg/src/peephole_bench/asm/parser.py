"""Text -> BasicBlock.

The grammar is the LLVM AArch64 textual style: one statement per line,
``//`` comments, labels ending in ``:``, directives starting with ``.``.
Lines may also be separated by the two-character escape ``\\n`` because
model replies and published tables print blocks that way.
"""
from __future__ import annotations

import re

from .model import (
    AddrMode,
    BasicBlock,
    COND_CODES,
    Cond,
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
    Shift,
    ShiftedReg,
    parse_register,
)

SHIFTS = ("lsl", "lsr", "asr", "ror", "msl")
EXTENDS = ("sxtw", "uxtw", "sxtb", "uxtb", "sxth", "uxth", "sxtx", "uxtx")
COND_OPERAND_MNEMONICS = frozenset({
    "cset", "csetm", "csel", "csinc", "csinv", "csneg", "cinc", "cinv",
    "cneg", "ccmp", "ccmn", "fcsel", "fccmp",
})

_LABEL_LINE = re.compile(r'^([A-Za-z_.$][\w.$@]*|"[^"]+")\s*:$')
_MNEMONIC = re.compile(r"^[A-Za-z][A-Za-z0-9_]*(\.[A-Za-z0-9]+)?$")
_SHIFT = re.compile(r"^(lsl|lsr|asr|ror|msl)\s*#?\s*([+-]?\w+)$", re.IGNORECASE)
_EXTEND = re.compile(r"^(sxtw|uxtw|sxtb|uxtb|sxth|uxth|sxtx|uxtx)(?:\s*#?\s*([+-]?\w+))?$",
                     re.IGNORECASE)
_MODIFIED = re.compile(r"^:([A-Za-z0-9_]+):(.+)$")
_SYMBOL = re.compile(r"^[A-Za-z_.$][\w.$@]*([+-]\d+)?$")
_BARE_INT = re.compile(r"^[+-]?(0x[0-9a-fA-F]+|\d+)$")


def split_lines(text: str) -> list:
    return text.replace("\\n", "\n").split("\n")


def strip_comment(line: str) -> str:
    in_str = False
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == '"':
            in_str = not in_str
        elif not in_str and line.startswith("//", i):
            return line[:i]
        i += 1
    return line


def _split_top_level(text: str, line_no: int) -> list:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ParseError("Unlexable", "unbalanced ']'", line_no, text)
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ParseError("Unlexable", "unbalanced '['", line_no, text)
    parts.append("".join(cur).strip())
    if any(p == "" for p in parts):
        raise ParseError("Unlexable", "empty operand", line_no, text)
    return parts


def _amount(text: str, line_no: int, token: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ParseError("Unlexable", f"bad shift amount {text!r}", line_no, token) from None


def _imm(text: str, line_no: int = 0) -> Imm:
    text = text.strip()
    if not text or any(c.isspace() for c in text):
        raise ParseError("Unlexable", f"bad immediate {text!r}", line_no, "#" + text)
    return Imm(text)


def _parse_mem(token: str, line_no: int) -> Mem:
    close = token.rfind("]")
    inner, tail = token[1:close], token[close + 1:].strip()
    if tail not in ("", "!"):
        raise ParseError("Unlexable", f"junk after memory operand: {tail!r}", line_no, token)
    parts = [p.strip() for p in inner.split(",")]
    if not parts or not parts[0]:
        raise ParseError("Unlexable", "memory operand without base", line_no, token)
    base = parse_register(parts[0])
    if base is None:
        raise ParseError("Unlexable", f"bad base register {parts[0]!r}", line_no, token)
    index = offset = None
    rest = parts[1:]
    if rest:
        first = rest[0]
        if first.startswith("#") or _BARE_INT.match(first):
            offset = _imm(first.lstrip("#"), line_no)
            if len(rest) > 1:
                raise ParseError("Unlexable", "too many memory operand fields", line_no, token)
        elif _MODIFIED.match(first):
            m = _MODIFIED.match(first)
            offset = LabelRef(m.group(2), m.group(1).lower())
            if len(rest) > 1:
                raise ParseError("Unlexable", "too many memory operand fields", line_no, token)
        else:
            reg = parse_register(first)
            if reg is None:
                raise ParseError("Unlexable", f"bad index {first!r}", line_no, token)
            op = amount = None
            if len(rest) == 2:
                spec = rest[1].lower()
                m = _SHIFT.match(spec) or _EXTEND.match(spec)
                if not m:
                    raise ParseError("Unlexable", f"bad index modifier {rest[1]!r}", line_no, token)
                op = m.group(1).lower()
                if m.group(2) is not None:
                    amount = _amount(m.group(2), line_no, token)
            elif len(rest) > 2:
                raise ParseError("Unlexable", "too many memory operand fields", line_no, token)
            index = MemIndex(reg, op, amount)
    mode = AddrMode.PRE_INDEX if tail == "!" else AddrMode.OFFSET
    return Mem(base, index, offset, mode)


def _parse_operand(token: str, mnemonic: str, line_no: int):
    low = token.lower()
    if token.startswith("["):
        return _parse_mem(token, line_no)
    if token.startswith("#"):
        return _imm(token[1:], line_no)
    if _BARE_INT.match(token):
        return _imm(token, line_no)
    reg = parse_register(low)
    if reg is not None:
        return Reg(reg)
    if mnemonic in COND_OPERAND_MNEMONICS and low in COND_CODES:
        return Cond(low)
    m = _MODIFIED.match(token)
    if m:
        return LabelRef(m.group(2), m.group(1).lower())
    if _SYMBOL.match(token):
        return LabelRef(token)
    raise ParseError("Unlexable", f"cannot lex operand {token!r}", line_no, token)


def parse_operands(text: str, mnemonic: str, line_no: int = 1) -> tuple:
    if not text.strip():
        return ()
    parts = _split_top_level(text, line_no)
    ops: list = []
    for i, part in enumerate(parts):
        low = part.lower()
        shift = _SHIFT.match(low)
        if shift and ops:
            amount = _amount(shift.group(2), line_no, part)
            prev = ops[-1]
            if isinstance(prev, Reg):
                ops[-1] = ShiftedReg(prev.reg, shift.group(1), amount)
            else:
                ops.append(Shift(shift.group(1), amount))
            continue
        ext = _EXTEND.match(low)
        if ext and ops and isinstance(ops[-1], Reg):
            amount = _amount(ext.group(2), line_no, part) if ext.group(2) is not None else None
            ops[-1] = ExtendedReg(ops[-1].reg, ext.group(1), amount)
            continue
        op = _parse_operand(part, mnemonic, line_no)
        prev = ops[-1] if ops else None
        if (isinstance(op, Imm) and i == len(parts) - 1 and isinstance(prev, Mem)
                and prev.mode is AddrMode.OFFSET and prev.index is None
                and prev.offset is None and not parts[i - 1].rstrip().endswith("!")):
            ops[-1] = Mem(prev.base, None, op, AddrMode.POST_INDEX)
            continue
        ops.append(op)
    return tuple(ops)


def parse_line(raw: str, line_no: int = 1):
    """Parse one source line into a block item, or None for blank/comment-only lines."""
    text = strip_comment(raw).strip()
    if not text:
        return None
    m = _LABEL_LINE.match(text)
    if m:
        return Label(m.group(1))
    if text.startswith("."):
        return Directive(text)
    fields = text.split(None, 1)
    head, rest = fields[0], fields[1] if len(fields) > 1 else ""
    if not _MNEMONIC.match(head):
        raise ParseError("Unlexable", f"bad mnemonic {head!r}", line_no, head)
    mnemonic = head.lower()
    operands = parse_operands(rest.strip(), mnemonic, line_no)
    return Instruction(mnemonic, operands, raw=raw.strip(), line=line_no)


def parse_block(text: str) -> BasicBlock:
    items = []
    for no, raw in enumerate(split_lines(text), start=1):
        item = parse_line(raw, no)
        if item is not None:
            items.append(item)
    if not items:
        raise ParseError("EmptyInput", "no statements in input")
    return BasicBlock(tuple(items))


def parse_instruction(text: str) -> Instruction:
    item = parse_line(text)
    if not isinstance(item, Instruction):
        raise ParseError("Unlexable", f"not an instruction: {text!r}", 1, text)
    return item


def try_parse(text: str):
    try:
        return parse_block(text)
    except ParseError:
        return None
