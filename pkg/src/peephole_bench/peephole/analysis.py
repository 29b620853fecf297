"""Block-local dataflow facts used by the rewrite rules."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..asm.isa import LOADS, STORES
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
    ShiftedReg,
    SP,
    is_terminator,
)
from ..interp.equivalence import own_frame
from ..interp.machine import SUPPORTED, MachineState, _Machine, _TrapSignal, mask, shift_value

FLAGS = "flags"
ALL_SLOTS = frozenset(range(31)) | {"sp", FLAGS}
CALLEE_SAVED = frozenset(range(19, 31))

NO_DEST = frozenset({"cmp", "cmn", "tst", "ccmp", "ccmn", "cbz", "cbnz", "tbz", "tbnz",
                     "b", "br", "blr", "bl", "ret", "nop"})
RMW_DEST = frozenset({"movk", "bfi", "bfxil"})
FLAG_WRITERS = frozenset({"adds", "subs", "cmp", "cmn", "tst", "ands", "bics", "negs",
                          "ccmp", "ccmn"})
FLAG_READERS = frozenset({"csel", "csinc", "csinv", "csneg", "cset", "csetm", "cinc",
                          "cinv", "cneg", "ccmp", "ccmn"})


@dataclass(frozen=True)
class InstrInfo:
    defs: tuple
    uses: tuple
    reads_flags: bool = False
    writes_flags: bool = False
    loads: bool = False
    stores: bool = False
    writeback: bool = False
    opaque: bool = False
    terminator: bool = False

    def def_slots(self) -> set:
        return {r.slot for r in self.defs if r.slot is not None}

    def use_slots(self) -> set:
        return {r.slot for r in self.uses if r.slot is not None}


def _regs_of(op) -> list:
    if isinstance(op, (Reg,)):
        return [op.reg]
    if isinstance(op, (ShiftedReg, ExtendedReg)):
        return [op.reg]
    if isinstance(op, Mem):
        regs = [op.base]
        if op.index is not None:
            regs.append(op.index.reg)
        return regs
    return []


def instr_info(instr: Instruction) -> InstrInfo:
    m = instr.mnemonic
    ops = instr.operands
    all_regs = [r for op in ops for r in _regs_of(op)]
    opaque = (m not in SUPPORTED or m in ("bl", "blr") or any(r.is_fp for r in all_regs))
    term = is_terminator(m)
    rf = m in FLAG_READERS or m.startswith("b.")
    wf = m in FLAG_WRITERS
    if opaque:
        return InstrInfo((), tuple(all_regs), True, True, True, True, False, True, term)
    if m in LOADS or m in STORES:
        mem = ops[-1] if ops and isinstance(ops[-1], Mem) else None
        data = [op.reg for op in ops[:-1] if isinstance(op, Reg)]
        mem_regs = _regs_of(mem) if mem is not None else []
        wb = mem is not None and mem.mode is not AddrMode.OFFSET
        if m in LOADS:
            defs = data + ([mem.base] if wb else [])
            return InstrInfo(tuple(defs), tuple(mem_regs), loads=True, writeback=wb)
        defs = [mem.base] if wb else []
        return InstrInfo(tuple(defs), tuple(data + mem_regs), stores=True, writeback=wb)
    if m in NO_DEST or m.startswith("b."):
        return InstrInfo((), tuple(all_regs), rf, wf, terminator=term)
    dest = ops[0].reg if ops and isinstance(ops[0], Reg) else None
    defs = (dest,) if dest is not None else ()
    srcs = [r for op in ops[1:] for r in _regs_of(op)]
    if m in RMW_DEST and dest is not None:
        srcs.append(dest)
    return InstrInfo(defs, tuple(srcs), rf, wf)


# ------------------------------------------------------------- constants


def evaluate(instr: Instruction, values: dict) -> Optional[int]:
    """Value written to the single destination of ``instr`` given known source
    slot values, or None when it cannot be computed."""
    x = [0] * 31
    for slot, v in values.items():
        if isinstance(slot, int):
            x[slot] = v
    mach = _Machine(MachineState(tuple(x), values.get("sp", 0x7FFFFFFFF000)), {})
    try:
        mach.execute(instr)
    except (_TrapSignal, AttributeError, IndexError, TypeError, KeyError):
        return None
    dest = instr.operands[0].reg
    return mach.read(dest.with_width(64) if dest.kind is RegKind.GPR32 else dest)


def is_bitmask_imm(value: int, width: int) -> bool:
    """AArch64 logical-immediate encodability."""
    value &= mask(width)
    if value == 0 or value == mask(width):
        return False
    size = width
    while size > 2:
        half = size // 2
        if (value & mask(half)) != ((value >> half) & mask(half)):
            break
        size = half
    elem = value & mask(size)
    for r in range(size):
        rot = ((elem >> r) | (elem << (size - r))) & mask(size)
        if rot & (rot + 1) == 0:
            return True
    return False


def mov_encodable(value: int, width: int) -> bool:
    """True when ``mov rd, #value`` is a single instruction (movz/movn/orr alias)."""
    value &= mask(width)
    for v in (value, ~value & mask(width)):
        chunks = [(v >> s) & 0xFFFF for s in range(0, width, 16)]
        if sum(1 for c in chunks if c) <= 1:
            return True
    return is_bitmask_imm(value, width)


# ------------------------------------------------------------- the context


@dataclass
class Frame:
    size: int
    sub_index: int  # instruction index of the leading sub
    add_index: int
    escapes: bool


class Context:
    """Per-pass facts for a list of block items."""

    def __init__(self, items: list):
        self.items = items
        self.positions = [i for i, it in enumerate(items) if isinstance(it, Instruction)]
        self.instrs = [items[i] for i in self.positions]
        self.infos = [instr_info(ins) for ins in self.instrs]
        n = len(self.instrs)
        self.ends_in_ret = bool(n) and self.instrs[-1].mnemonic == "ret"
        self.frame = self._frame()
        self.live_after = self._liveness()
        self.consts, self.upper_zero = self._constants()

    # -- frame
    def _frame(self) -> Optional[Frame]:
        size = own_frame(BasicBlock(tuple(self.instrs)))
        if not size:
            return None
        last = len(self.instrs) - 1
        if is_terminator(self.instrs[last].mnemonic):
            last -= 1
        escapes = False
        for k, ins in enumerate(self.instrs):
            if k in (0, last):
                continue
            for op in ins.operands:
                if isinstance(op, Mem):
                    if op.base == SP and (op.mode is not AddrMode.OFFSET
                                          or isinstance(op.offset, LabelRef)):
                        escapes = True
                    if op.index is not None and op.index.reg == SP:
                        escapes = True
                elif SP in _regs_of(op):
                    escapes = True
            if self.infos[k].opaque:
                escapes = True
        return Frame(size, 0, last, escapes)

    # -- liveness
    def live_out(self) -> set:
        if not self.ends_in_ret:
            return set(ALL_SLOTS)
        live = {0, "sp"} | set(CALLEE_SAVED)
        for info in reversed(self.infos):
            gprs = [r.slot for r in info.defs if r.is_gpr and r.slot is not None]
            if gprs:
                live.add(gprs[-1])
                break
        return live

    def _liveness(self) -> list:
        n = len(self.instrs)
        after = [set() for _ in range(n)]
        live = self.live_out()
        for k in range(n - 1, -1, -1):
            after[k] = set(live)
            info = self.infos[k]
            if info.opaque:
                live = set(ALL_SLOTS)
                continue
            live -= info.def_slots()
            if info.writes_flags:
                live.discard(FLAGS)
            live |= info.use_slots()
            if info.reads_flags:
                live.add(FLAGS)
        return after

    # -- constants
    def _constants(self):
        consts, upper = [], []
        known: dict = {}
        uz: set = set()
        for ins, info in zip(self.instrs, self.infos):
            consts.append(dict(known))
            upper.append(set(uz))
            if info.opaque:
                known, uz = {}, set()
                continue
            value = None
            if (len(info.defs) == 1 and not info.loads and not info.reads_flags
                    and info.defs[0].is_gpr
                    and not any(isinstance(op, LabelRef) for op in ins.operands)
                    and all(s in known for s in info.use_slots())):
                value = evaluate(ins, {s: known[s] for s in info.use_slots()})
            for reg in info.defs:
                slot = reg.slot
                if slot is None:
                    continue
                known.pop(slot, None)
                uz.discard(slot)
                if reg.kind is RegKind.GPR32:
                    uz.add(slot)
            if value is not None and info.defs[0].slot is not None:
                known[info.defs[0].slot] = value
                if value >> 32 == 0:
                    uz.add(info.defs[0].slot)
        return consts, upper

    # -- queries
    def const_of(self, k: int, op, width: int) -> Optional[int]:
        """Known value of a source operand at instruction k."""
        if isinstance(op, Imm):
            return None if op.value is None else op.value & mask(width)
        if isinstance(op, Reg):
            if op.reg.is_zero:
                return 0
            v = self.consts[k].get(op.reg.slot)
            return None if v is None else v & mask(width)
        if isinstance(op, ShiftedReg):
            base = self.const_of(k, Reg(op.reg), width)
            return None if base is None else shift_value(base, op.shift, op.amount, width)
        return None

    def reaching_def(self, k: int, slot) -> Optional[int]:
        for j in range(k - 1, -1, -1):
            info = self.infos[j]
            if info.opaque or slot in info.def_slots():
                return j
        return None

    def defined_between(self, lo: int, hi: int, slot) -> bool:
        """Is ``slot`` written by any instruction with index in [lo, hi)?"""
        return any(self.infos[j].opaque or slot in self.infos[j].def_slots()
                   for j in range(lo, hi))

    def used_between(self, lo: int, hi: int, slot) -> bool:
        return any(self.infos[j].opaque or slot in self.infos[j].use_slots()
                   for j in range(lo, hi))

    def is_live_after(self, k: int, slot) -> bool:
        return slot in self.live_after[k]

    def item_index(self, k: int) -> int:
        return self.positions[k]


def register_of(op) -> Optional[Register]:
    return op.reg if isinstance(op, Reg) else None
