"""Data model for the AArch64 basic-block subset.

Every type here is a frozen dataclass so blocks can be hashed, compared
structurally and shared across threads.  ``Instruction.raw`` and
``Instruction.line`` are excluded from equality: two blocks that print the
same are the same block.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


class RegKind(str, Enum):
    GPR32 = "w"
    GPR64 = "x"
    SP = "sp"
    WZR = "wzr"
    XZR = "xzr"
    # Floating-point/SIMD scalar views; parsed and validated, never executed.
    FP8 = "b"
    FP16 = "h"
    FP32 = "s"
    FP64 = "d"
    FP128 = "q"


_INDEXED = {RegKind.GPR32, RegKind.GPR64, RegKind.FP8, RegKind.FP16,
            RegKind.FP32, RegKind.FP64, RegKind.FP128}
_FP = {RegKind.FP8, RegKind.FP16, RegKind.FP32, RegKind.FP64, RegKind.FP128}
_WIDTH = {
    RegKind.GPR32: 32, RegKind.WZR: 32, RegKind.GPR64: 64, RegKind.XZR: 64,
    RegKind.SP: 64, RegKind.FP8: 8, RegKind.FP16: 16, RegKind.FP32: 32,
    RegKind.FP64: 64, RegKind.FP128: 128,
}


@dataclass(frozen=True)
class Register:
    kind: RegKind
    index: Optional[int] = None

    def __post_init__(self):
        if self.kind in _INDEXED:
            limit = 30 if self.kind in (RegKind.GPR32, RegKind.GPR64) else 31
            if self.index is None or not 0 <= self.index <= limit:
                raise ValueError(f"bad register index {self.index} for {self.kind.value}")
        elif self.index is not None:
            raise ValueError(f"{self.kind.value} carries no index")

    @property
    def name(self) -> str:
        if self.kind in _INDEXED:
            return f"{self.kind.value}{self.index}"
        return self.kind.value

    @property
    def width(self) -> int:
        return _WIDTH[self.kind]

    @property
    def is_fp(self) -> bool:
        return self.kind in _FP

    @property
    def is_gpr(self) -> bool:
        """Integer register view, including the zero registers (not sp)."""
        return self.kind in (RegKind.GPR32, RegKind.GPR64, RegKind.WZR, RegKind.XZR)

    @property
    def is_zero(self) -> bool:
        return self.kind in (RegKind.WZR, RegKind.XZR)

    @property
    def slot(self) -> Optional[Union[int, str]]:
        """Architectural storage shared by the w/x views; None for zero registers."""
        if self.kind in (RegKind.GPR32, RegKind.GPR64):
            return self.index
        if self.kind is RegKind.SP:
            return "sp"
        if self.is_fp:
            return f"v{self.index}"
        return None

    def with_width(self, width: int) -> "Register":
        if self.kind in (RegKind.GPR32, RegKind.GPR64):
            return Register(RegKind.GPR32 if width == 32 else RegKind.GPR64, self.index)
        if self.is_zero:
            return WZR if width == 32 else XZR
        return self

    def __str__(self) -> str:
        return self.name


SP = Register(RegKind.SP)
WZR = Register(RegKind.WZR)
XZR = Register(RegKind.XZR)

_REG_RE = re.compile(r"^([wxbhsdq])(\d{1,2})$")


def parse_register(text: str) -> Optional[Register]:
    t = text.lower()
    if t == "sp":
        return SP
    if t == "wzr":
        return WZR
    if t == "xzr":
        return XZR
    # LLVM prints the frame/link registers under their x names; accept aliases.
    if t == "fp":
        return Register(RegKind.GPR64, 29)
    if t == "lr":
        return Register(RegKind.GPR64, 30)
    m = _REG_RE.match(t)
    if not m:
        return None
    kind = RegKind(m.group(1))
    idx = int(m.group(2))
    limit = 30 if kind in (RegKind.GPR32, RegKind.GPR64) else 31
    if idx > limit:
        return None
    return Register(kind, idx)


def gpr(name: str) -> Register:
    reg = parse_register(name)
    if reg is None:
        raise ValueError(f"not a register: {name!r}")
    return reg


# ---------------------------------------------------------------- operands

_INT_RE = re.compile(r"^[+-]?(0x[0-9a-f]+|\d+)$", re.IGNORECASE)
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)(e[+-]?\d+)?$", re.IGNORECASE)


def canonical_literal(text: str) -> str:
    """Normalize an immediate literal: decimal loses leading zeros/plus, hex is lowercased."""
    t = text.strip()
    if _INT_RE.match(t):
        neg = t.startswith("-")
        body = t.lstrip("+-").lower()
        if body.startswith("0x"):
            return ("-" if neg else "") + body
        return str(int(t))
    return t


@dataclass(frozen=True)
class Imm:
    """Immediate operand; ``text`` is the literal after '#'.

    A malformed literal such as ``#r`` is representable (``value`` is None)
    so that invalid model output still parses and can be diagnosed.
    """
    text: str

    def __post_init__(self):
        object.__setattr__(self, "text", canonical_literal(self.text))

    @classmethod
    def of(cls, value: int, hex_form: bool = False) -> "Imm":
        if hex_form:
            return cls(("-" if value < 0 else "") + hex(abs(value)))
        return cls(str(value))

    @property
    def value(self) -> Optional[int]:
        if _INT_RE.match(self.text):
            return int(self.text, 0)
        return None

    @property
    def is_float(self) -> bool:
        return self.value is None and bool(_FLOAT_RE.match(self.text))

    @property
    def is_hex(self) -> bool:
        return self.text.lstrip("+-").lower().startswith("0x")

    @property
    def malformed(self) -> bool:
        return self.value is None and not self.is_float


@dataclass(frozen=True)
class ShiftedReg:
    reg: Register
    shift: str  # lsl | lsr | asr | ror
    amount: int


@dataclass(frozen=True)
class ExtendedReg:
    reg: Register
    extend: str  # sxtw | uxtw | sxtb | uxtb | sxth | uxth | sxtx | uxtx
    amount: Optional[int] = None


@dataclass(frozen=True)
class Shift:
    """A shift specifier standing alone, as in ``movk w8, #1, lsl #16``."""
    shift: str
    amount: int


@dataclass(frozen=True)
class LabelRef:
    name: str
    modifier: Optional[str] = None  # e.g. "lo12" for :lo12:sym


@dataclass(frozen=True)
class Cond:
    code: str


class AddrMode(str, Enum):
    OFFSET = "offset"
    PRE_INDEX = "pre"
    POST_INDEX = "post"


@dataclass(frozen=True)
class MemIndex:
    reg: Register
    op: Optional[str] = None  # lsl | sxtw | uxtw | sxtx
    amount: Optional[int] = None


@dataclass(frozen=True)
class Mem:
    base: Register
    index: Optional[MemIndex] = None
    offset: Optional[Union[Imm, LabelRef]] = None
    mode: AddrMode = AddrMode.OFFSET

    @property
    def displacement(self) -> int:
        if isinstance(self.offset, Imm) and self.offset.value is not None:
            return self.offset.value
        return 0


@dataclass(frozen=True)
class Reg:
    reg: Register


Operand = Union[Reg, Imm, ShiftedReg, ExtendedReg, Shift, LabelRef, Cond, Mem]


# ------------------------------------------------------------ block items


@dataclass(frozen=True)
class Instruction:
    mnemonic: str
    operands: tuple = ()
    raw: str = field(default="", compare=False)
    line: int = field(default=1, compare=False)

    def regs(self):
        """Every register mentioned by the operands, in textual order."""
        out = []
        for op in self.operands:
            out.extend(operand_registers(op))
        return out


@dataclass(frozen=True)
class Directive:
    text: str


@dataclass(frozen=True)
class Label:
    name: str


def operand_registers(op) -> list:
    if isinstance(op, Reg):
        return [op.reg]
    if isinstance(op, (ShiftedReg, ExtendedReg)):
        return [op.reg]
    if isinstance(op, Mem):
        regs = [op.base]
        if op.index is not None:
            regs.append(op.index.reg)
        return regs
    return []


# ------------------------------------------------------------ terminators


@dataclass(frozen=True)
class Ret:
    pass


@dataclass(frozen=True)
class Branch:
    target: str


@dataclass(frozen=True)
class CondBranch:
    mnemonic: str
    args: tuple
    target: str


@dataclass(frozen=True)
class Call:
    target: str


COND_CODES = frozenset(
    "eq ne cs hs cc lo mi pl vs vc hi ls ge lt gt le al nv".split())
CONDITIONAL_BRANCHES = frozenset({"cbz", "cbnz", "tbz", "tbnz"} | {f"b.{c}" for c in COND_CODES})
TERMINATORS = frozenset({"ret", "b", "br", "bl", "blr"} | CONDITIONAL_BRANCHES)


def is_terminator(mnemonic: str) -> bool:
    return mnemonic in TERMINATORS


def _target_name(op) -> str:
    if isinstance(op, LabelRef):
        return op.name
    if isinstance(op, Reg):
        return op.reg.name
    return str(op)


def terminator_of(instr: Instruction):
    m = instr.mnemonic
    ops = instr.operands
    if m == "ret":
        return Ret()
    if m in ("b", "br") and ops:
        return Branch(_target_name(ops[-1]))
    if m in ("bl", "blr") and ops:
        return Call(_target_name(ops[-1]))
    if m in CONDITIONAL_BRANCHES and ops:
        return CondBranch(m, tuple(ops[:-1]), _target_name(ops[-1]))
    return None


@dataclass(frozen=True)
class BasicBlock:
    items: tuple = ()

    @property
    def instructions(self) -> list:
        return [it for it in self.items if isinstance(it, Instruction)]

    @property
    def terminator(self):
        instrs = self.instructions
        if not instrs or not is_terminator(instrs[-1].mnemonic):
            return None
        return terminator_of(instrs[-1])

    @property
    def is_straight_line(self) -> bool:
        instrs = self.instructions
        return not any(is_terminator(i.mnemonic) for i in instrs[:-1])

    def mnemonics(self) -> list:
        return [i.mnemonic for i in self.instructions]

    def __len__(self) -> int:
        return len(self.instructions)


class ParseError(ValueError):
    def __init__(self, code: str, message: str, line: int = 0, token: str = ""):
        super().__init__(f"line {line}: {message}" if line else message)
        self.code = code
        self.line = line
        self.token = token
