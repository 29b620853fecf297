"""Deterministic interpreter for straight-line AArch64 integer code."""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Optional

from ..asm.model import (
    AddrMode,
    BasicBlock,
    ExtendedReg,
    Imm,
    Instruction,
    LabelRef,
    Mem,
    Reg,
    Register,
    RegKind,
    Shift,
    ShiftedReg,
    is_terminator,
)

M64 = (1 << 64) - 1
INITIAL_SP = 0x7FFFFFFFF000
SYMBOL_BASE = 0x40000000


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    value &= mask(width)
    return value - (1 << width) if value >> (width - 1) else value


def sign_extend(value: int, from_width: int, to_width: int = 64) -> int:
    return to_signed(value, from_width) & mask(to_width)


# ------------------------------------------------------------------ state


@dataclass
class MachineState:
    """Register file, flags and sparse memory.

    Treated as a value: ``run_block`` never mutates its input state.
    ``mem`` only holds bytes written by stores; every other address reads
    a byte derived from ``(seed, address)``.
    """
    x: tuple
    sp: int
    nzcv: tuple = (False, False, False, False)
    mem: dict = field(default_factory=dict)
    seed: int = 0

    def reg(self, name: str) -> int:
        if name == "sp":
            return self.sp
        if name in ("xzr", "wzr"):
            return 0
        idx = int(name[1:])
        return self.x[idx] if name[0] == "x" else self.x[idx] & 0xFFFFFFFF

    def read_byte(self, addr: int) -> int:
        addr &= M64
        if addr in self.mem:
            return self.mem[addr]
        return hashed_byte(self.seed, addr)

    def registers(self) -> dict:
        out = {f"x{i}": v for i, v in enumerate(self.x)}
        out["sp"] = self.sp
        return out

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "registers": {k: hex(v) for k, v in self.registers().items()},
            "nzcv": "".join("NZCV"[i] if f else "-" for i, f in enumerate(self.nzcv)),
        }


@lru_cache(maxsize=65536)
def _hashed_word(seed: int, chunk: int) -> bytes:
    h = hashlib.blake2b(digest_size=8)
    h.update((seed & M64).to_bytes(8, "little"))
    h.update(chunk.to_bytes(8, "little"))
    return h.digest()


def hashed_byte(seed: int, addr: int) -> int:
    return _hashed_word(seed, addr & ~7)[addr & 7]


_BOUNDARY = (0, 1, 2, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF, 0xFFFFFFFF_FFFFFFFF,
             0x80000000_00000000, 0x7FFFFFFF_FFFFFFFF, 0xFF, 0x100, 0xFFFF)


def _draw(rng: random.Random) -> int:
    r = rng.random()
    if r < 0.3:
        return rng.getrandbits(64)
    if r < 0.55:
        return rng.getrandbits(32)
    if r < 0.8:
        return rng.randint(-64, 64) & M64
    return rng.choice(_BOUNDARY)


def init_state(seed: int) -> MachineState:
    rng = random.Random(seed & M64)
    x = tuple(_draw(rng) for _ in range(31))
    return MachineState(x=x, sp=INITIAL_SP, seed=seed & M64)


def symbol_address(name: str) -> int:
    """Fixed 4 KiB-aligned address for a symbol."""
    digest = hashlib.sha256(name.encode()).digest()
    return SYMBOL_BASE + (int.from_bytes(digest[:4], "little") % (1 << 18)) * 4096


# ----------------------------------------------------------------- results


@dataclass(frozen=True)
class TerminatorOutcome:
    kind: str  # Returned | BranchTaken | BranchNotTaken | CalledExternal | FellThrough
    target: Optional[str] = None


RETURNED = TerminatorOutcome("Returned")
FELL_THROUGH = TerminatorOutcome("FellThrough")


@dataclass(frozen=True)
class Trap:
    kind: str  # UnsupportedInstruction | Misaligned | UnresolvedSymbol | InternalControlTransfer
    detail: str = ""


@dataclass(frozen=True)
class Store:
    address: int
    width: int
    value: int


@dataclass
class ExecutionResult:
    final: MachineState
    stores: tuple
    terminator_outcome: Optional[TerminatorOutcome]
    trap: Optional[Trap] = None
    initial_sp: int = INITIAL_SP


class _TrapSignal(Exception):
    def __init__(self, trap: Trap):
        self.trap = trap


# -------------------------------------------------------------- arithmetic


def add_with_carry(x: int, y: int, carry: int, width: int):
    """ARM ARM AddWithCarry: returns (result, (n, z, c, v))."""
    m = mask(width)
    x &= m
    y &= m
    unsigned_sum = x + y + carry
    signed_sum = to_signed(x, width) + to_signed(y, width) + carry
    result = unsigned_sum & m
    n = bool(result >> (width - 1))
    z = result == 0
    c = result != unsigned_sum
    v = to_signed(result, width) != signed_sum
    return result, (n, z, c, v)


def logic_flags(result: int, width: int):
    return (bool(result >> (width - 1)), result == 0, False, False)


def shift_value(value: int, kind: str, amount: int, width: int) -> int:
    m = mask(width)
    value &= m
    if kind == "lsl":
        return (value << amount) & m
    if kind == "lsr":
        return value >> amount
    if kind == "asr":
        return (to_signed(value, width) >> amount) & m
    if kind == "ror":
        amount %= width
        return ((value >> amount) | (value << (width - amount))) & m if amount else value
    raise ValueError(kind)


def extend_value(value: int, kind: str) -> int:
    bits = {"b": 8, "h": 16, "w": 32, "x": 64}[kind[3]]
    value &= mask(bits)
    if kind.startswith("s"):
        return sign_extend(value, bits)
    return value


def condition_holds(code: str, nzcv) -> bool:
    n, z, c, v = nzcv
    base = code[:2]
    table = {
        "eq": z, "ne": not z, "cs": c, "hs": c, "cc": not c, "lo": not c,
        "mi": n, "pl": not n, "vs": v, "vc": not v, "hi": c and not z,
        "ls": not (c and not z), "ge": n == v, "lt": n != v,
        "gt": (not z) and n == v, "le": not ((not z) and n == v),
        "al": True, "nv": True,
    }
    return table[base]


def udiv(a: int, b: int, width: int) -> int:
    return 0 if b == 0 else (a & mask(width)) // (b & mask(width))


def sdiv(a: int, b: int, width: int) -> int:
    sa, sb = to_signed(a, width), to_signed(b, width)
    if sb == 0:
        return 0
    q = abs(sa) // abs(sb)
    if (sa < 0) != (sb < 0):
        q = -q
    return q & mask(width)


# ----------------------------------------------------------------- machine

SUPPORTED = frozenset("""
mov movz movn movk add adds sub subs cmp cmn tst and ands orr eor bic bics orn eon
mul madd msub mneg smulh umulh smull umull udiv sdiv lsl lsr asr ror neg negs mvn
sxtw sxtb sxth uxtb uxth cset csetm csel csinc csinv csneg cinc cinv cneg ccmp ccmn
ubfx sbfx ubfiz sbfiz bfi bfxil adrp adr
ldr str ldur stur ldrb strb ldurb sturb ldrh strh ldurh sturh ldrsb ldrsh ldursb
ldursh ldrsw ldursw ldp stp ldpsw
ret b bl br blr cbz cbnz tbz tbnz nop
""".split()) | frozenset(f"b.{c}" for c in
                         "eq ne cs hs cc lo mi pl vs vc hi ls ge lt gt le al nv".split())

_LOAD_SIZE = {"ldrb": 1, "ldurb": 1, "ldrh": 2, "ldurh": 2, "ldrsb": 1, "ldursb": 1,
              "ldrsh": 2, "ldursh": 2, "ldrsw": 4, "ldursw": 4, "ldpsw": 4}
_STORE_SIZE = {"strb": 1, "sturb": 1, "strh": 2, "sturh": 2}
_SIGNED_LOADS = frozenset({"ldrsb", "ldursb", "ldrsh", "ldursh", "ldrsw", "ldursw", "ldpsw"})


class _Machine:
    def __init__(self, state: MachineState, symbols: Optional[Mapping[str, int]]):
        self.x = list(state.x)
        self.sp = state.sp
        self.nzcv = tuple(state.nzcv)
        self.mem = dict(state.mem)
        self.seed = state.seed
        self.symbols = symbols
        self.stores: list = []

    # -- registers
    def read(self, reg: Register) -> int:
        k = reg.kind
        if k is RegKind.GPR64:
            return self.x[reg.index]
        if k is RegKind.GPR32:
            return self.x[reg.index] & 0xFFFFFFFF
        if k is RegKind.SP:
            return self.sp
        if k is RegKind.WZR or k is RegKind.XZR:
            return 0
        raise _TrapSignal(Trap("UnsupportedInstruction", f"fp register {reg.name}"))

    def write(self, reg: Register, value: int) -> None:
        k = reg.kind
        if k is RegKind.GPR64:
            self.x[reg.index] = value & M64
        elif k is RegKind.GPR32:
            self.x[reg.index] = value & 0xFFFFFFFF
        elif k is RegKind.SP:
            self.sp = value & M64
        elif k is RegKind.WZR or k is RegKind.XZR:
            pass
        else:
            raise _TrapSignal(Trap("UnsupportedInstruction", f"fp register {reg.name}"))

    def symbol(self, name: str) -> int:
        if self.symbols is None:
            return symbol_address(name)
        if name not in self.symbols:
            raise _TrapSignal(Trap("UnresolvedSymbol", name))
        return self.symbols[name]

    # -- operands
    def value(self, op, width: int) -> int:
        if isinstance(op, Reg):
            return self.read(op.reg) & mask(width)
        if isinstance(op, Imm):
            if op.value is None:
                raise _TrapSignal(Trap("UnsupportedInstruction", f"immediate #{op.text}"))
            return op.value & mask(width)
        if isinstance(op, ShiftedReg):
            return shift_value(self.read(op.reg), op.shift, op.amount, width)
        if isinstance(op, ExtendedReg):
            v = extend_value(self.read(op.reg), op.extend)
            return (v << (op.amount or 0)) & mask(width)
        if isinstance(op, LabelRef):
            addr = self.symbol(op.name)
            if op.modifier == "lo12":
                return addr & 0xFFF
            if op.modifier is None:
                return addr & mask(width)
            raise _TrapSignal(Trap("UnresolvedSymbol", f":{op.modifier}:{op.name}"))
        raise _TrapSignal(Trap("UnsupportedInstruction", f"operand {op!r}"))

    # -- memory
    def load(self, addr: int, size: int) -> int:
        out = 0
        for i in range(size):
            a = (addr + i) & M64
            b = self.mem[a] if a in self.mem else hashed_byte(self.seed, a)
            out |= b << (8 * i)
        return out

    def store(self, addr: int, size: int, value: int) -> None:
        value &= mask(8 * size)
        for i in range(size):
            self.mem[(addr + i) & M64] = (value >> (8 * i)) & 0xFF
        self.stores.append(Store(addr & M64, size, value))

    def address(self, mem: Mem):
        """Effective address and the base write-back value (or None)."""
        base = self.read(mem.base)
        if mem.base.kind is RegKind.SP and base % 16:
            raise _TrapSignal(Trap("Misaligned", hex(base)))
        if mem.index is not None:
            idx = mem.index
            v = self.read(idx.reg)
            if idx.op in ("sxtw", "uxtw", "sxtx", "uxtx"):
                v = extend_value(v, idx.op)
            return (base + (v << (idx.amount or 0))) & M64, None
        if isinstance(mem.offset, LabelRef):
            off = self.value(mem.offset, 64)
        else:
            off = mem.displacement
        if mem.mode is AddrMode.OFFSET:
            return (base + off) & M64, None
        if mem.mode is AddrMode.PRE_INDEX:
            addr = (base + off) & M64
            return addr, addr
        return base, (base + off) & M64

    # -- execution
    def execute(self, instr: Instruction):
        m = instr.mnemonic
        ops = instr.operands
        if m not in SUPPORTED:
            raise _TrapSignal(Trap("UnsupportedInstruction", m))
        handler = _HANDLERS.get(m)
        if handler is not None:
            return handler(self, ops)
        if m.startswith("ld") or m.startswith("st"):
            return self._ldst(m, ops)
        if m.startswith("b."):
            taken = condition_holds(m[2:], self.nzcv)
            return _branch(taken, ops[-1])
        raise _TrapSignal(Trap("UnsupportedInstruction", m))

    def _ldst(self, m: str, ops):
        mem = ops[-1]
        addr, wb = self.address(mem)
        data = ops[:-1]
        for op in data:
            if op.reg.is_fp:
                raise _TrapSignal(Trap("UnsupportedInstruction", f"{m} {op.reg.name}"))
        if m.startswith("ld"):
            size = _LOAD_SIZE.get(m) or data[0].reg.width // 8
            for i, op in enumerate(data):
                v = self.load(addr + i * size, size)
                if m in _SIGNED_LOADS:
                    v = sign_extend(v, 8 * size, op.reg.width)
                self.write(op.reg, v)
        else:
            size = _STORE_SIZE.get(m) or data[0].reg.width // 8
            for i, op in enumerate(data):
                self.store(addr + i * size, size, self.read(op.reg))
        if wb is not None:
            self.write(mem.base, wb)
        return None


def _dest_width(ops) -> int:
    return ops[0].reg.width if isinstance(ops[0], Reg) else 64


def _op2(mach: _Machine, ops, width: int) -> int:
    """Second source for add/sub style forms, handling ``#imm, lsl #12``."""
    src = ops[2] if len(ops) >= 3 else ops[1]
    v = mach.value(src, width)
    if len(ops) == 4 and isinstance(ops[3], Shift):
        v = (v << ops[3].amount) & mask(width)
    return v


def _addsub(sub: bool, flags: bool):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        a = mach.value(ops[1], w)
        b = _op2(mach, ops, w)
        if sub:
            res, nzcv = add_with_carry(a, ~b, 1, w)
        else:
            res, nzcv = add_with_carry(a, b, 0, w)
        mach.write(ops[0].reg, res)
        if flags:
            mach.nzcv = nzcv
    return run


def _compare(negate: bool):
    def run(mach: _Machine, ops):
        w = ops[0].reg.width
        a = mach.value(ops[0], w)
        b = mach.value(ops[1], w)
        if len(ops) == 3 and isinstance(ops[2], Shift):
            b = (b << ops[2].amount) & mask(w)
        if negate:
            _, mach.nzcv = add_with_carry(a, b, 0, w)
        else:
            _, mach.nzcv = add_with_carry(a, ~b, 1, w)
    return run


def _logic(fn, flags=False, invert=False):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        a = mach.value(ops[1], w)
        b = mach.value(ops[2], w)
        if invert:
            b = ~b & mask(w)
        res = fn(a, b) & mask(w)
        mach.write(ops[0].reg, res)
        if flags:
            mach.nzcv = logic_flags(res, w)
    return run


def _tst(mach: _Machine, ops):
    w = ops[0].reg.width
    res = mach.value(ops[0], w) & mach.value(ops[1], w)
    mach.nzcv = logic_flags(res, w)


def _binary(fn):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        mach.write(ops[0].reg, fn(mach.value(ops[1], w), mach.value(ops[2], w), w) & mask(w))
    return run


def _shift(kind):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        amount = mach.value(ops[2], w) % w
        mach.write(ops[0].reg, shift_value(mach.value(ops[1], w), kind, amount, w))
    return run


def _mov(mach: _Machine, ops):
    w = _dest_width(ops)
    mach.write(ops[0].reg, mach.value(ops[1], w))


def _movwide(kind):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        shift = ops[2].amount if len(ops) == 3 else 0
        imm = (mach.value(ops[1], w) << shift) & mask(w)
        if kind == "z":
            res = imm
        elif kind == "n":
            res = ~imm & mask(w)
        else:
            old = mach.read(ops[0].reg)
            res = (old & ~(0xFFFF << shift)) | imm
        mach.write(ops[0].reg, res & mask(w))
    return run


def _madd(sub):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        prod = mach.value(ops[1], w) * mach.value(ops[2], w)
        acc = mach.value(ops[3], w)
        mach.write(ops[0].reg, (acc - prod if sub else acc + prod) & mask(w))
    return run


def _mul_long(signed):
    def run(mach: _Machine, ops):
        a = mach.value(ops[1], 32)
        b = mach.value(ops[2], 32)
        if signed:
            a, b = to_signed(a, 32), to_signed(b, 32)
        mach.write(ops[0].reg, (a * b) & M64)
    return run


def _mulh(signed):
    def run(mach: _Machine, ops):
        a = mach.value(ops[1], 64)
        b = mach.value(ops[2], 64)
        if signed:
            a, b = to_signed(a, 64), to_signed(b, 64)
        mach.write(ops[0].reg, ((a * b) >> 64) & M64)
    return run


def _unary(fn, flags=False):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        v = mach.value(ops[1], w)
        if flags:
            res, mach.nzcv = add_with_carry(0, ~v, 1, w)
        else:
            res = fn(v, w)
        mach.write(ops[0].reg, res & mask(w))
    return run


def _ext(kind):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        mach.write(ops[0].reg, extend_value(mach.read(ops[1].reg), kind) & mask(w))
    return run


def _csel(variant):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        if variant in ("cset", "csetm"):
            hold = condition_holds(ops[1].code, mach.nzcv)
            res = (1 if variant == "cset" else mask(w)) if hold else 0
        elif variant in ("cinc", "cinv", "cneg"):
            a = mach.value(ops[1], w)
            if condition_holds(ops[2].code, mach.nzcv):
                res = {"cinc": a + 1, "cinv": ~a, "cneg": -a}[variant]
            else:
                res = a
        else:
            a = mach.value(ops[1], w)
            b = mach.value(ops[2], w)
            if condition_holds(ops[3].code, mach.nzcv):
                res = a
            else:
                res = {"csel": b, "csinc": b + 1, "csinv": ~b, "csneg": -b}[variant]
        mach.write(ops[0].reg, res & mask(w))
    return run


def _ccmp(negate):
    def run(mach: _Machine, ops):
        w = ops[0].reg.width
        if condition_holds(ops[3].code, mach.nzcv):
            a = mach.value(ops[0], w)
            b = mach.value(ops[1], w)
            _, mach.nzcv = add_with_carry(a, b, 0, w) if negate else add_with_carry(a, ~b, 1, w)
        else:
            f = ops[2].value
            mach.nzcv = (bool(f & 8), bool(f & 4), bool(f & 2), bool(f & 1))
    return run


def _bitfield(kind):
    def run(mach: _Machine, ops):
        w = _dest_width(ops)
        src = mach.value(ops[1], w)
        lsb, width = ops[2].value, ops[3].value
        field_mask = mask(width)
        if kind == "ubfx":
            res = (src >> lsb) & field_mask
        elif kind == "sbfx":
            res = sign_extend((src >> lsb) & field_mask, width, w)
        elif kind == "ubfiz":
            res = (src & field_mask) << lsb
        elif kind == "sbfiz":
            res = sign_extend(src & field_mask, width, w) << lsb
        elif kind == "bfi":
            old = mach.read(ops[0].reg) & mask(w)
            res = (old & ~(field_mask << lsb)) | ((src & field_mask) << lsb)
        else:  # bfxil
            old = mach.read(ops[0].reg) & mask(w)
            res = (old & ~field_mask) | ((src >> lsb) & field_mask)
        mach.write(ops[0].reg, res & mask(w))
    return run


def _adrp(mach: _Machine, ops):
    mach.write(ops[0].reg, mach.symbol(ops[1].name) & ~0xFFF)


def _adr(mach: _Machine, ops):
    mach.write(ops[0].reg, mach.symbol(ops[1].name))


def _branch(taken: bool, target_op):
    target = target_op.name if isinstance(target_op, LabelRef) else str(target_op)
    return TerminatorOutcome("BranchTaken", target) if taken else TerminatorOutcome("BranchNotTaken", target)


def _cbz(nonzero):
    def run(mach: _Machine, ops):
        v = mach.value(ops[0], ops[0].reg.width)
        return _branch((v != 0) if nonzero else (v == 0), ops[1])
    return run


def _tbz(nonzero):
    def run(mach: _Machine, ops):
        bit = (mach.read(ops[0].reg) >> ops[1].value) & 1
        return _branch(bool(bit) if nonzero else not bit, ops[2])
    return run


def _ret(mach, ops):
    return RETURNED


def _b(mach, ops):
    return _branch(True, ops[0])


def _bl(mach, ops):
    op = ops[0]
    return TerminatorOutcome("CalledExternal", op.name if isinstance(op, LabelRef) else op.reg.name)


def _nop(mach, ops):
    return None


_HANDLERS = {
    "mov": _mov, "movz": _movwide("z"), "movn": _movwide("n"), "movk": _movwide("k"),
    "add": _addsub(False, False), "adds": _addsub(False, True),
    "sub": _addsub(True, False), "subs": _addsub(True, True),
    "cmp": _compare(False), "cmn": _compare(True), "tst": _tst,
    "and": _logic(lambda a, b: a & b), "ands": _logic(lambda a, b: a & b, flags=True),
    "orr": _logic(lambda a, b: a | b), "eor": _logic(lambda a, b: a ^ b),
    "bic": _logic(lambda a, b: a & b, invert=True),
    "bics": _logic(lambda a, b: a & b, flags=True, invert=True),
    "orn": _logic(lambda a, b: a | b, invert=True),
    "eon": _logic(lambda a, b: a ^ b, invert=True),
    "mul": _binary(lambda a, b, w: a * b),
    "mneg": _binary(lambda a, b, w: -(a * b)),
    "udiv": _binary(udiv), "sdiv": _binary(sdiv),
    "madd": _madd(False), "msub": _madd(True),
    "smull": _mul_long(True), "umull": _mul_long(False),
    "smulh": _mulh(True), "umulh": _mulh(False),
    "lsl": _shift("lsl"), "lsr": _shift("lsr"), "asr": _shift("asr"), "ror": _shift("ror"),
    "neg": _unary(lambda v, w: -v), "negs": _unary(None, flags=True),
    "mvn": _unary(lambda v, w: ~v),
    "sxtw": _ext("sxtw"), "sxtb": _ext("sxtb"), "sxth": _ext("sxth"),
    "uxtb": _ext("uxtb"), "uxth": _ext("uxth"),
    "cset": _csel("cset"), "csetm": _csel("csetm"), "csel": _csel("csel"),
    "csinc": _csel("csinc"), "csinv": _csel("csinv"), "csneg": _csel("csneg"),
    "cinc": _csel("cinc"), "cinv": _csel("cinv"), "cneg": _csel("cneg"),
    "ccmp": _ccmp(False), "ccmn": _ccmp(True),
    "ubfx": _bitfield("ubfx"), "sbfx": _bitfield("sbfx"), "ubfiz": _bitfield("ubfiz"),
    "sbfiz": _bitfield("sbfiz"), "bfi": _bitfield("bfi"), "bfxil": _bitfield("bfxil"),
    "adrp": _adrp, "adr": _adr,
    "ret": _ret, "b": _b, "br": _b, "bl": _bl, "blr": _bl,
    "cbz": _cbz(False), "cbnz": _cbz(True), "tbz": _tbz(False), "tbnz": _tbz(True),
    "nop": _nop,
}


def run_block(state: MachineState, block: BasicBlock,
              symbols: Optional[Mapping[str, int]] = None) -> ExecutionResult:
    """Execute ``block`` from ``state``.

    ``symbols`` maps label names to addresses; when omitted every label gets
    a synthetic address from :func:`symbol_address`.  Traps end execution
    early and are reported in the result, never raised.
    """
    mach = _Machine(state, symbols)
    instrs = block.instructions
    outcome = None
    trap = None
    try:
        for i, instr in enumerate(instrs):
            if is_terminator(instr.mnemonic) and i != len(instrs) - 1:
                raise _TrapSignal(Trap("InternalControlTransfer", instr.mnemonic))
            outcome = mach.execute(instr)
        if outcome is None:
            outcome = FELL_THROUGH
    except _TrapSignal as sig:
        trap = sig.trap
        outcome = None
    except (AttributeError, IndexError, TypeError, KeyError) as exc:
        # Operand shapes the validator would reject (e.g. "str w8, #5").
        trap = Trap("UnsupportedInstruction", f"malformed operands: {exc}")
        outcome = None
    final = MachineState(tuple(mach.x), mach.sp, mach.nzcv, mach.mem, mach.seed)
    return ExecutionResult(final, tuple(mach.stores), outcome, trap, state.sp)
