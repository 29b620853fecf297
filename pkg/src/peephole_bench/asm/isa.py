"""Mnemonic table and syntactic validation.

Validation answers "would an assembler accept this line?" for the integer
base-ISA subset that appears in compiler-generated basic blocks.  Ranges
follow the printable assembly, not the encodings: ``mov`` accepts any
64-bit literal, logical immediates are not checked for bitmask
encodability.  Floating-point mnemonics are checked for arity only.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import (
    AddrMode,
    BasicBlock,
    COND_CODES,
    Cond,
    ExtendedReg,
    Imm,
    Instruction,
    Label,
    LabelRef,
    Mem,
    Reg,
    RegKind,
    Shift,
    ShiftedReg,
)
from .printer import format_operand

# Diagnostic codes.
UNKNOWN_MNEMONIC = "UnknownMnemonic"
BAD_ARITY = "BadOperandArity"
BAD_KIND = "BadOperandKind"
MALFORMED_IMM = "MalformedImmediate"
MALFORMED_REG = "MalformedRegister"
BAD_LABEL = "UnknownLabelSyntax"
UNDEFINED_SYMBOL = "UndefinedSymbol"

LABEL_MODIFIERS = frozenset({"lo12", "got", "got_lo12", "tprel_lo12", "tprel_hi12",
                             "tprel_lo12_nc", "dtprel_lo12", "abs_g0", "abs_g1",
                             "abs_g2", "abs_g3", "abs_g0_nc", "abs_g1_nc", "abs_g2_nc"})

_REGLIKE = re.compile(r"^[wx]\d+$", re.IGNORECASE)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    code: str
    message: str
    token: str = ""

    def to_json(self) -> str:
        return json.dumps({"line": self.line, "code": self.code, "message": self.message},
                          sort_keys=True)


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple = field(default_factory=tuple)

    @property
    def valid(self) -> bool:
        return not self.diagnostics

    def to_jsonl(self) -> str:
        return "\n".join(d.to_json() for d in self.diagnostics)


# ------------------------------------------------------------------ forms
#
# Slot codes:
#   R   integer register incl. zero register, joins the width group
#   RS  integer register (not zero) or sp, joins the width group
#   X/W fixed-width integer register (zero register allowed)
#   XS  64-bit register or sp
#   I   integer immediate
#   SR  R with optional shift
#   ER  extended register (width checked against the extend kind)
#   SH  standalone shift specifier
#   L   plain symbol;  LO  :lo12:symbol
#   C   condition code

_ADD_SUB = [("RS", "RS", "I"), ("RS", "RS", "I", "SH"), ("R", "R", "SR"),
            ("RS", "RS", "ER"), ("RS", "RS", "LO")]
_ADDS_SUBS = [("R", "RS", "I"), ("R", "RS", "I", "SH"), ("R", "R", "SR"), ("R", "RS", "ER")]
_CMP = [("RS", "I"), ("RS", "I", "SH"), ("R", "SR"), ("RS", "ER")]
_LOGIC_IMM = [("RS", "R", "I"), ("R", "R", "SR")]
_LOGIC_S = [("R", "R", "I"), ("R", "R", "SR")]
_LOGIC_REG = [("R", "R", "SR")]
_SHIFT_OPS = [("R", "R", "I"), ("R", "R", "R")]
_BITFIELD = [("R", "R", "I", "I")]

FORMS = {
    "add": _ADD_SUB, "sub": _ADD_SUB,
    "adds": _ADDS_SUBS, "subs": _ADDS_SUBS,
    "cmp": _CMP, "cmn": _CMP,
    "tst": [("R", "I"), ("R", "SR")],
    "and": _LOGIC_IMM, "orr": _LOGIC_IMM, "eor": _LOGIC_IMM,
    "ands": _LOGIC_S, "bics": _LOGIC_REG, "bic": _LOGIC_REG, "orn": _LOGIC_REG,
    "eon": _LOGIC_REG,
    # Immediate multiplies are not encodable but appear in published
    # peephole examples; accepted so those blocks validate.
    "mul": [("R", "R", "R"), ("R", "R", "I")],
    "mneg": [("R", "R", "R")],
    "smulh": [("X", "X", "X")], "umulh": [("X", "X", "X")],
    "smull": [("X", "W", "W")], "umull": [("X", "W", "W")],
    "madd": [("R", "R", "R", "R")], "msub": [("R", "R", "R", "R")],
    "smaddl": [("X", "W", "W", "X")], "umaddl": [("X", "W", "W", "X")],
    "udiv": [("R", "R", "R")], "sdiv": [("R", "R", "R")],
    "lsl": _SHIFT_OPS, "lsr": _SHIFT_OPS, "asr": _SHIFT_OPS, "ror": _SHIFT_OPS,
    "mov": [("RS", "RS"), ("R", "R"), ("R", "I")],
    "movz": [("R", "I"), ("R", "I", "SH")], "movn": [("R", "I"), ("R", "I", "SH")],
    "movk": [("R", "I"), ("R", "I", "SH")],
    "mvn": [("R", "SR")], "neg": [("R", "SR")], "negs": [("R", "SR")],
    "sxtw": [("X", "W")], "sxtb": [("R", "W")], "sxth": [("R", "W")],
    "uxtb": [("W", "W")], "uxth": [("W", "W")],
    "cset": [("R", "C")], "csetm": [("R", "C")],
    "csel": [("R", "R", "R", "C")], "csinc": [("R", "R", "R", "C")],
    "csinv": [("R", "R", "R", "C")], "csneg": [("R", "R", "R", "C")],
    "cinc": [("R", "R", "C")], "cinv": [("R", "R", "C")], "cneg": [("R", "R", "C")],
    "ccmp": [("R", "R", "I", "C"), ("R", "I", "I", "C")],
    "ccmn": [("R", "R", "I", "C"), ("R", "I", "I", "C")],
    "ubfx": _BITFIELD, "sbfx": _BITFIELD, "ubfiz": _BITFIELD, "sbfiz": _BITFIELD,
    "bfi": _BITFIELD, "bfxil": _BITFIELD,
    "adrp": [("X", "L")], "adr": [("X", "L")],
    "ret": [(), ("X",)],
    "b": [("L",)], "bl": [("L",)], "br": [("X",)], "blr": [("X",)],
    "cbz": [("R", "L")], "cbnz": [("R", "L")],
    "tbz": [("R", "I", "L")], "tbnz": [("R", "I", "L")],
    "nop": [()],
}
for _cc in COND_CODES:
    FORMS[f"b.{_cc}"] = [("L",)]

# Loads/stores: mnemonic -> (allowed data register widths, access size in bytes or None=by width)
LOAD_STORE = {
    "ldr": ({32, 64, "fp"}, None), "str": ({32, 64, "fp"}, None),
    "ldur": ({32, 64, "fp"}, None), "stur": ({32, 64, "fp"}, None),
    "ldrb": ({32}, 1), "strb": ({32}, 1), "ldurb": ({32}, 1), "sturb": ({32}, 1),
    "ldrh": ({32}, 2), "strh": ({32}, 2), "ldurh": ({32}, 2), "sturh": ({32}, 2),
    "ldrsb": ({32, 64}, 1), "ldrsh": ({32, 64}, 2),
    "ldursb": ({32, 64}, 1), "ldursh": ({32, 64}, 2),
    "ldrsw": ({64}, 4), "ldursw": ({64}, 4),
}
PAIRS = {"ldp": ({32, 64, "fp"}, None), "stp": ({32, 64, "fp"}, None), "ldpsw": ({64}, 4)}

# Floating point: arity only.
FP_ARITY = {
    "fmov": {2}, "fadd": {3}, "fsub": {3}, "fmul": {3}, "fdiv": {3}, "fnmul": {3},
    "fmax": {3}, "fmin": {3}, "fmaxnm": {3}, "fminnm": {3},
    "fcmp": {2}, "fcmpe": {2}, "fneg": {2}, "fabs": {2}, "fsqrt": {2}, "fcvt": {2},
    "scvtf": {2}, "ucvtf": {2}, "fcvtzs": {2}, "fcvtzu": {2}, "fcvtas": {2},
    "fcvtau": {2}, "fcvtms": {2}, "fcvtmu": {2}, "fcvtps": {2}, "fcvtpu": {2},
    "frintm": {2}, "frintp": {2}, "frintz": {2}, "frinta": {2}, "frintx": {2},
    "fmadd": {4}, "fmsub": {4}, "fnmadd": {4}, "fnmsub": {4}, "fcsel": {4}, "fccmp": {4},
}

MNEMONICS = frozenset(FORMS) | frozenset(LOAD_STORE) | frozenset(PAIRS) | frozenset(FP_ARITY)

LOADS = frozenset(m for m in list(LOAD_STORE) + list(PAIRS) if m.startswith("ld"))
STORES = frozenset(m for m in list(LOAD_STORE) + list(PAIRS) if m.startswith("st"))


def is_known_mnemonic(mnemonic: str) -> bool:
    return mnemonic in MNEMONICS


# ------------------------------------------------------------- checking


class _Issue(Exception):
    def __init__(self, code: str, message: str, token: str):
        super().__init__(message)
        self.code, self.message, self.token = code, message, token


def _is_int_reg(op) -> bool:
    return isinstance(op, Reg) and (op.reg.is_gpr or op.reg.kind is RegKind.SP)


def _slot_width(slot: str, op) -> Optional[int]:
    """Check one operand against a slot code; returns the width the operand
    contributes to the form's width group (None if it does not join)."""
    tok = format_operand(op)
    if slot in ("R", "RS", "X", "W", "XS"):
        if not isinstance(op, Reg):
            raise _Issue(BAD_KIND, f"expected register, got {tok}", tok)
        reg = op.reg
        if reg.is_fp:
            raise _Issue(BAD_KIND, f"expected integer register, got {tok}", tok)
        if slot == "R" and reg.kind is RegKind.SP:
            raise _Issue(BAD_KIND, "sp not allowed here", tok)
        if slot == "RS" and reg.is_zero:
            raise _Issue(BAD_KIND, "zero register not allowed here", tok)
        if slot == "X" and (reg.width != 64 or reg.kind is RegKind.SP):
            raise _Issue(MALFORMED_REG, f"expected 64-bit register, got {tok}", tok)
        if slot == "W" and reg.width != 32:
            raise _Issue(MALFORMED_REG, f"expected 32-bit register, got {tok}", tok)
        if slot == "XS" and (reg.width != 64 or reg.is_zero):
            raise _Issue(MALFORMED_REG, f"expected x register or sp, got {tok}", tok)
        return reg.width if slot in ("R", "RS") else None
    if slot == "I":
        if not isinstance(op, Imm):
            raise _Issue(BAD_KIND, f"expected immediate, got {tok}", tok)
        return None
    if slot == "SR":
        if isinstance(op, Reg):
            return _slot_width("R", op)
        if isinstance(op, ShiftedReg):
            if op.reg.is_fp or op.reg.kind is RegKind.SP:
                raise _Issue(BAD_KIND, f"bad shifted register {tok}", tok)
            if not 0 <= op.amount < op.reg.width:
                raise _Issue(MALFORMED_IMM, f"shift amount out of range in {tok}", tok)
            return op.reg.width
        raise _Issue(BAD_KIND, f"expected register, got {tok}", tok)
    if slot == "ER":
        if not isinstance(op, ExtendedReg):
            raise _Issue(BAD_KIND, f"expected extended register, got {tok}", tok)
        if op.amount is not None and not 0 <= op.amount <= 4:
            raise _Issue(MALFORMED_IMM, f"extend amount out of range in {tok}", tok)
        want = 64 if op.extend in ("sxtx", "uxtx") else 32
        if op.reg.width != want or op.reg.is_fp:
            raise _Issue(MALFORMED_REG, f"{op.extend} needs a {want}-bit register", tok)
        return None
    if slot == "SH":
        if not isinstance(op, Shift) or op.shift != "lsl":
            raise _Issue(BAD_KIND, f"expected lsl shift, got {tok}", tok)
        return None
    if slot == "L":
        if not isinstance(op, LabelRef) or op.modifier is not None:
            raise _Issue(BAD_KIND, f"expected label, got {tok}", tok)
        return None
    if slot == "LO":
        if not isinstance(op, LabelRef) or op.modifier is None:
            raise _Issue(BAD_KIND, f"expected :lo12: reference, got {tok}", tok)
        return None
    if slot == "C":
        if not isinstance(op, Cond):
            raise _Issue(BAD_KIND, f"expected condition code, got {tok}", tok)
        return None
    raise AssertionError(slot)


def _imm_ranges(mnemonic: str, form: tuple, ops: tuple, width: int) -> None:
    """Printable-assembly range checks for the immediates of a matched form."""
    def value(i):
        return ops[i].value

    def bad(i, why):
        tok = format_operand(ops[i])
        raise _Issue(MALFORMED_IMM, f"{tok}: {why}", tok)

    if mnemonic in ("add", "sub", "adds", "subs", "cmp", "cmn") and "I" in form:
        i = form.index("I")
        if abs(value(i)) > 4095:
            bad(i, "add/sub immediate must be within 12 bits")
        if "SH" in form and ops[form.index("SH")].amount not in (0, 12):
            tok = format_operand(ops[form.index("SH")])
            raise _Issue(MALFORMED_IMM, "immediate shift must be lsl #0 or #12", tok)
    elif mnemonic in ("lsl", "lsr", "asr", "ror") and form[2] == "I":
        if not 0 <= value(2) < width:
            bad(2, f"shift amount must be in [0, {width - 1}]")
    elif mnemonic in ("movz", "movn", "movk"):
        if not 0 <= value(1) <= 0xFFFF:
            bad(1, "16-bit immediate expected")
        if len(form) == 3 and ops[2].amount not in range(0, width, 16):
            tok = format_operand(ops[2])
            raise _Issue(MALFORMED_IMM, "shift must be a multiple of 16", tok)
    elif mnemonic == "mov" and form == ("R", "I"):
        if not -(1 << 63) <= value(1) < (1 << 64):
            bad(1, "immediate does not fit in 64 bits")
    elif mnemonic in ("and", "orr", "eor", "ands", "tst") and "I" in form:
        i = form.index("I")
        if not -(1 << (width - 1)) <= value(i) < (1 << width):
            bad(i, "not a valid logical immediate")
    elif mnemonic in ("tbz", "tbnz"):
        if not 0 <= value(1) < width:
            bad(1, f"bit number must be in [0, {width - 1}]")
    elif mnemonic in ("ccmp", "ccmn"):
        if form[1] == "I" and not 0 <= value(1) <= 31:
            bad(1, "5-bit immediate expected")
        if not 0 <= value(2) <= 15:
            bad(2, "nzcv immediate must be in [0, 15]")
    elif form == _BITFIELD[0]:
        lsb, w = value(2), value(3)
        if not 0 <= lsb < width:
            bad(2, "lsb out of range")
        if not 1 <= w <= width - lsb:
            bad(3, "width out of range")


def _check_form(instr: Instruction, form: tuple) -> None:
    ops = instr.operands
    widths = set()
    for slot, op in zip(form, ops):
        w = _slot_width(slot, op)
        if w is not None:
            widths.add(w)
    if len(widths) > 1:
        first = ops[0]
        tok = format_operand(first)
        raise _Issue(MALFORMED_REG, f"register width mismatch in {instr.mnemonic}", tok)
    width = widths.pop() if widths else 64
    if instr.mnemonic in ("tbz", "tbnz", "sxtb", "sxth") and isinstance(ops[0], Reg):
        width = ops[0].reg.width
    _imm_ranges(instr.mnemonic, form, ops, width)


def _log2(n: int) -> int:
    return n.bit_length() - 1


def _check_mem(mem: Mem, size: int, pair: bool, mnemonic: str) -> None:
    tok = format_operand(mem)
    if mem.base.kind not in (RegKind.GPR64, RegKind.SP):
        raise _Issue(MALFORMED_REG, "base register must be an x register or sp", mem.base.name)
    if mem.index is not None:
        if pair or mnemonic.startswith(("ldur", "stur")) or mem.mode is not AddrMode.OFFSET:
            raise _Issue(BAD_KIND, "register offset not allowed here", tok)
        idx = mem.index
        if idx.reg.is_fp or idx.reg.kind is RegKind.SP:
            raise _Issue(MALFORMED_REG, "bad index register", idx.reg.name)
        if idx.reg.width == 32 and idx.op not in ("sxtw", "uxtw"):
            raise _Issue(MALFORMED_REG, "32-bit index needs sxtw/uxtw", idx.reg.name)
        if idx.reg.width == 64 and idx.op not in (None, "lsl", "sxtx"):
            raise _Issue(BAD_KIND, f"bad index extend {idx.op}", tok)
        if idx.op == "lsl" and idx.amount is None:
            raise _Issue(MALFORMED_IMM, "lsl needs an amount", tok)
        if idx.amount is not None and idx.amount not in (0, _log2(size)):
            raise _Issue(MALFORMED_IMM, f"index shift must be #0 or #{_log2(size)}", tok)
        return
    if isinstance(mem.offset, LabelRef):
        if mem.offset.modifier is None or pair or mem.mode is not AddrMode.OFFSET:
            raise _Issue(BAD_LABEL, "symbolic offset must use :lo12:", tok)
        return
    if isinstance(mem.offset, Imm):
        if mem.offset.value is None:
            raise _Issue(MALFORMED_IMM, "malformed offset", f"#{mem.offset.text}")
        off = mem.offset.value
        if pair:
            if off % size or not -64 * size <= off <= 63 * size:
                raise _Issue(MALFORMED_IMM, "pair offset out of range", f"#{mem.offset.text}")
        elif mnemonic.startswith(("ldur", "stur")) or mem.mode is not AddrMode.OFFSET:
            if not -256 <= off <= 255:
                raise _Issue(MALFORMED_IMM, "unscaled offset must be in [-256, 255]",
                             f"#{mem.offset.text}")
        elif not -256 <= off <= 4095 * size or (off > 255 and off % size):
            raise _Issue(MALFORMED_IMM, "offset out of range", f"#{mem.offset.text}")


def _data_reg_size(op, allowed, fixed, tok) -> int:
    if not isinstance(op, Reg) or op.reg.kind is RegKind.SP:
        raise _Issue(BAD_KIND, f"expected data register, got {tok}", tok)
    reg = op.reg
    if reg.is_fp:
        if "fp" not in allowed:
            raise _Issue(MALFORMED_REG, f"{tok} not allowed here", tok)
        return reg.width // 8
    if reg.width not in allowed:
        raise _Issue(MALFORMED_REG, f"{tok} has the wrong width for this access", tok)
    return fixed or reg.width // 8


def _check_load_store(instr: Instruction) -> None:
    m, ops = instr.mnemonic, instr.operands
    pair = m in PAIRS
    allowed, fixed = (PAIRS if pair else LOAD_STORE)[m]
    want = 3 if pair else 2
    if len(ops) != want:
        raise _Issue(BAD_ARITY, f"{m} takes {want} operands", m)
    mem = ops[-1]
    if not isinstance(mem, Mem):
        tok = format_operand(mem)
        raise _Issue(BAD_KIND, f"{m} requires a memory operand, got {tok}", tok)
    sizes = []
    for op in ops[:-1]:
        sizes.append(_data_reg_size(op, allowed, fixed, format_operand(op)))
    if pair and sizes[0] != sizes[1]:
        tok = format_operand(ops[1])
        raise _Issue(MALFORMED_REG, "pair registers differ in width", tok)
    if pair and m.startswith("ld") and ops[0] == ops[1]:
        tok = format_operand(ops[1])
        raise _Issue(BAD_KIND, "ldp destinations must differ", tok)
    _check_mem(mem, sizes[0], pair, m)


def _lexical_issue(instr: Instruction) -> Optional[_Issue]:
    fp = instr.mnemonic in FP_ARITY
    for op in instr.operands:
        if isinstance(op, Imm) and op.malformed:
            return _Issue(MALFORMED_IMM, f"malformed immediate #{op.text}", f"#{op.text}")
        if isinstance(op, Imm) and op.is_float and not fp:
            return _Issue(MALFORMED_IMM, f"floating-point literal #{op.text} in integer op",
                          f"#{op.text}")
        if isinstance(op, LabelRef):
            if _REGLIKE.match(op.name):
                return _Issue(MALFORMED_REG, f"invalid register {op.name}", op.name)
            if op.modifier is not None and op.modifier not in LABEL_MODIFIERS:
                tok = format_operand(op)
                return _Issue(BAD_LABEL, f"unknown relocation modifier :{op.modifier}:", tok)
        if isinstance(op, Mem) and isinstance(op.offset, Imm) and op.offset.malformed:
            return _Issue(MALFORMED_IMM, f"malformed offset #{op.offset.text}",
                          f"#{op.offset.text}")
    return None


def check_instruction(instr: Instruction) -> Optional[Diagnostic]:
    m = instr.mnemonic
    if m not in MNEMONICS:
        return Diagnostic(instr.line, UNKNOWN_MNEMONIC, f"unknown mnemonic '{m}'", m)
    issue = _lexical_issue(instr)
    if issue is None:
        issue = _match(instr)
    if issue is None:
        return None
    return Diagnostic(instr.line, issue.code, issue.message, issue.token)


def _match(instr: Instruction) -> Optional[_Issue]:
    m = instr.mnemonic
    if m in FP_ARITY:
        if len(instr.operands) not in FP_ARITY[m]:
            return _Issue(BAD_ARITY, f"{m} takes {sorted(FP_ARITY[m])} operands", m)
        return None
    if m in LOAD_STORE or m in PAIRS:
        try:
            _check_load_store(instr)
        except _Issue as issue:
            return issue
        return None
    forms = [f for f in FORMS[m] if len(f) == len(instr.operands)]
    if not forms:
        arities = sorted({len(f) for f in FORMS[m]})
        return _Issue(BAD_ARITY, f"{m} takes {arities} operands, got {len(instr.operands)}", m)
    best = None
    for form in forms:
        try:
            _check_form(instr, form)
            return None
        except _Issue as issue:
            # Prefer the diagnostic from the form that got furthest: a range
            # or width complaint beats a plain kind mismatch.
            if best is None or (best.code == BAD_KIND and issue.code != BAD_KIND):
                best = issue
    return best


def block_symbols(block: BasicBlock) -> set:
    """Symbols referenced by instructions of the block."""
    out = set()
    for instr in block.instructions:
        for op in instr.operands:
            if isinstance(op, LabelRef):
                out.add(op.name)
            elif isinstance(op, Mem) and isinstance(op.offset, LabelRef):
                out.add(op.offset.name)
    return out


def _undefined_temp_symbols(block: BasicBlock, known: Iterable[str]):
    known = set(known) | {it.name for it in block.items if isinstance(it, Label)}
    for instr in block.instructions:
        for op in instr.operands:
            ref = op if isinstance(op, LabelRef) else (
                op.offset if isinstance(op, Mem) and isinstance(op.offset, LabelRef) else None)
            if ref is not None and ref.name.startswith(".L") and ref.name not in known:
                yield Diagnostic(instr.line, UNDEFINED_SYMBOL,
                                 f"undefined temporary symbol {ref.name}", ref.name)


def validate_block(block: BasicBlock, known_symbols: Optional[Iterable[str]] = None
                   ) -> ValidationReport:
    """Check every instruction of ``block``.

    ``known_symbols``, when given, is the set of symbols the surrounding file
    defines; references to undefined ``.L`` temporaries are then reported as
    the assembler would.  Without it symbols are not checked.
    """
    diags = []
    for instr in block.instructions:
        d = check_instruction(instr)
        if d is not None:
            diags.append(d)
    if known_symbols is not None:
        flagged = {d.line for d in diags}
        diags.extend(d for d in _undefined_temp_symbols(block, known_symbols)
                     if d.line not in flagged)
        diags.sort(key=lambda d: d.line)
    return ValidationReport(tuple(diags))
