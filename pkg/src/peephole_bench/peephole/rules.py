"""Rewrite rules, grouped by optimization category.

Each rule is ``rule(ctx, k) -> Optional[dict]`` where ``k`` indexes the
instruction list and the returned dict maps *item* indices to their
replacement item lists (an empty list deletes the item).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from ..asm.isa import LOADS, STORES
from ..asm.model import (
    AddrMode,
    Directive,
    ExtendedReg,
    Imm,
    Instruction,
    Mem,
    MemIndex,
    Reg,
    Register,
    RegKind,
    ShiftedReg,
    SP,
    WZR,
    XZR,
)
from ..interp.machine import mask, to_signed
from .analysis import FLAGS, RMW_DEST, Context, evaluate, is_bitmask_imm, mov_encodable

CONSTANT_FOLDING = "ConstantFolding"
ALGEBRAIC_LAWS = "AlgebraicLaws"
STRENGTH_REDUCTION = "StrengthReduction"
NULL_SEQUENCES = "NullSequences"
COMBINE_OPERATIONS = "CombineOperations"
ADDRESS_MODE = "AddressModeOperations"

CATEGORIES = (CONSTANT_FOLDING, ALGEBRAIC_LAWS, STRENGTH_REDUCTION, NULL_SEQUENCES,
              COMBINE_OPERATIONS, ADDRESS_MODE)


@dataclass(frozen=True)
class RewriteRule:
    name: str
    category: str
    apply: Callable[[Context, int], Optional[dict]]


def _ins(mnemonic: str, *ops) -> Instruction:
    return Instruction(mnemonic, tuple(ops))


def _zero(width: int) -> Reg:
    return Reg(WZR if width == 32 else XZR)


def _mov_const(dest: Register, value: int) -> Instruction:
    w = dest.width
    value &= mask(w)
    if value == 0:
        return _ins("mov", Reg(dest), _zero(w))
    signed = to_signed(value, w)
    return _ins("mov", Reg(dest), Imm.of(signed if signed < 0 else value))


def _replace(ctx: Context, k: int, *new) -> dict:
    return {ctx.item_index(k): list(new)}


def _delete(ctx: Context, k: int) -> dict:
    return {ctx.item_index(k): []}


def _plain_gpr(op) -> bool:
    return isinstance(op, Reg) and op.reg.is_gpr and not op.reg.is_zero


def _flags_ok(ctx: Context, k: int) -> bool:
    return not ctx.infos[k].writes_flags or not ctx.is_live_after(k, FLAGS)


def _simple_alu(ctx: Context, k: int, mnemonics) -> Optional[Instruction]:
    """Instruction k when it is a 3-operand non-flag ALU op from ``mnemonics``."""
    ins = ctx.instrs[k]
    if ins.mnemonic not in mnemonics or len(ins.operands) != 3:
        return None
    if not isinstance(ins.operands[0], Reg) or ctx.infos[k].opaque:
        return None
    return ins


# ------------------------------------------------------------ folding


def fold_constant(ctx: Context, k: int):
    ins, info = ctx.instrs[k], ctx.infos[k]
    if (info.opaque or info.loads or info.stores or info.terminator or info.reads_flags
            or len(info.defs) != 1 or not _flags_ok(ctx, k)):
        return None
    dest = info.defs[0]
    if not dest.is_gpr or dest.is_zero:
        return None
    if ins.mnemonic == "mov" and (isinstance(ins.operands[1], Imm)
                                  or ins.operands[1] == _zero(dest.width)):
        return None
    if ins.mnemonic in ("adrp", "adr"):
        return None
    known = ctx.consts[k]
    if not all(s in known for s in info.use_slots()):
        return None
    value = evaluate(ins, {s: known[s] for s in info.use_slots()})
    if value is None or not mov_encodable(value, dest.width):
        return None
    new = _mov_const(dest, value)
    if new == ins:
        return None
    return _replace(ctx, k, new)


_IMM_FORMS = {"add", "sub", "adds", "subs", "and", "orr", "eor", "ands",
              "lsl", "lsr", "asr", "ror"}
_COMMUTATIVE = {"add", "adds", "and", "orr", "eor", "ands", "mul"}


def propagate_constant(ctx: Context, k: int):
    """Replace a register source holding a known constant by an immediate."""
    ins = ctx.instrs[k]
    m = ins.mnemonic
    ops = ins.operands
    if ctx.infos[k].opaque:
        return None
    if m in ("cmp", "cmn", "tst") and len(ops) == 2 and _plain_gpr(ops[1]):
        w = ops[0].reg.width
        c = ctx.const_of(k, ops[1], w)
        if c is None or not _imm_ok(m, c, w):
            return None
        return _replace(ctx, k, _ins(m, ops[0], Imm.of(c)))
    if m not in _IMM_FORMS or len(ops) != 3 or not isinstance(ops[0], Reg):
        return None
    w = ops[0].reg.width
    a, b = ops[1], ops[2]
    candidates = []
    if _plain_gpr(b):
        candidates.append((a, b))
    if m in _COMMUTATIVE and _plain_gpr(a) and isinstance(b, Reg):
        candidates.append((b, a))
    for src, const_op in candidates:
        if not isinstance(src, Reg) or src.reg.is_zero:
            continue
        c = ctx.const_of(k, const_op, w)
        if c is None or not _imm_ok(m, c, w):
            continue
        if m in ("lsl", "lsr", "asr", "ror"):
            c %= w
        return _replace(ctx, k, _ins(m, ops[0], src, Imm.of(c)))
    return None


def _imm_ok(m: str, c: int, w: int) -> bool:
    if m in ("add", "sub", "adds", "subs", "cmp", "cmn"):
        return 1 <= c <= 4095
    if m in ("and", "orr", "eor", "ands", "tst"):
        return c not in (0, mask(w)) and is_bitmask_imm(c, w)
    return m in ("lsl", "lsr", "asr", "ror")


# ------------------------------------------------------------ algebraic


def _mov(dest: Register, src) -> Instruction:
    return _ins("mov", Reg(dest), src)


def algebraic_identity(ctx: Context, k: int):
    ins = _simple_alu(ctx, k, {"mul", "add", "sub", "orr", "eor", "and", "udiv", "sdiv"})
    if ins is None:
        return None
    m = ins.mnemonic
    d, a, b = ins.operands
    w = d.reg.width
    ca = ctx.const_of(k, a, w)
    cb = ctx.const_of(k, b, w)
    if m == "mul":
        if ca == 0 or cb == 0:
            return _replace(ctx, k, _mov(d.reg, _zero(w)))
        if cb == 1 and isinstance(a, Reg):
            return _replace(ctx, k, _mov(d.reg, a))
        if ca == 1 and isinstance(b, Reg):
            return _replace(ctx, k, _mov(d.reg, b))
        return None
    if m in ("udiv", "sdiv"):
        if cb == 1 and isinstance(a, Reg):
            return _replace(ctx, k, _mov(d.reg, a))
        return None
    if m == "and":
        if ca == 0 or cb == 0:
            return _replace(ctx, k, _mov(d.reg, _zero(w)))
        if cb == mask(w) and isinstance(a, Reg):
            return _replace(ctx, k, _mov(d.reg, a))
        if ca == mask(w) and isinstance(b, Reg):
            return _replace(ctx, k, _mov(d.reg, b))
        return None
    if m in ("sub", "eor") and isinstance(a, Reg) and a == b and not a.reg.is_zero:
        return _replace(ctx, k, _mov(d.reg, _zero(w)))
    if isinstance(b, ExtendedReg) or isinstance(a, ExtendedReg):
        return None
    if cb == 0 and isinstance(a, Reg) and not (a.reg.is_zero and d.reg == SP):
        if a.reg.kind is RegKind.SP and m != "add" and m != "sub":
            return None
        return _replace(ctx, k, _mov(d.reg, a))
    if m != "sub" and ca == 0 and isinstance(b, Reg) and b.reg.kind is not RegKind.SP:
        return _replace(ctx, k, _mov(d.reg, b))
    return None


# ------------------------------------------------------------ strength


def _log2_exact(c: Optional[int]) -> Optional[int]:
    if c is None or c < 2 or c & (c - 1):
        return None
    return c.bit_length() - 1


def strength_reduce(ctx: Context, k: int):
    ins = _simple_alu(ctx, k, {"mul", "udiv"})
    if ins is None:
        return None
    d, a, b = ins.operands
    w = d.reg.width
    if ins.mnemonic == "mul":
        for src, other in ((a, b), (b, a)):
            sh = _log2_exact(ctx.const_of(k, other, w))
            if sh is not None and _plain_gpr(src):
                return _replace(ctx, k, _ins("lsl", d, src, Imm.of(sh)))
        return None
    sh = _log2_exact(ctx.const_of(k, b, w))
    if sh is not None and _plain_gpr(a):
        return _replace(ctx, k, _ins("lsr", d, a, Imm.of(sh)))
    return None


# ------------------------------------------------------------ null sequences


def _self_move_removable(ctx: Context, k: int, reg: Register) -> bool:
    if reg.width == 64:
        return True
    return reg.slot in ctx.upper_zero[k] or not ctx.is_live_after(k, reg.slot)


def self_move(ctx: Context, k: int):
    ins = ctx.instrs[k]
    if ins.mnemonic != "mov" or len(ins.operands) != 2:
        return None
    d, s = ins.operands
    if isinstance(d, Reg) and d == s and _self_move_removable(ctx, k, d.reg):
        return _delete(ctx, k)
    return None


def shift_by_zero(ctx: Context, k: int):
    ins = _simple_alu(ctx, k, {"lsl", "lsr", "asr", "ror"})
    if ins is None:
        return None
    d, a, b = ins.operands
    if not isinstance(b, Imm) or b.value != 0 or not isinstance(a, Reg):
        return None
    if d == a:
        if _self_move_removable(ctx, k, d.reg):
            return _delete(ctx, k)
        return None
    return _replace(ctx, k, _mov(d.reg, a))


def dead_instruction(ctx: Context, k: int):
    info = ctx.infos[k]
    if info.opaque or info.stores or info.terminator or info.writeback:
        return None
    if any(r.kind is RegKind.SP for r in info.defs):
        return None
    if any(ctx.is_live_after(k, s) for s in info.def_slots()):
        return None
    if not _flags_ok(ctx, k):
        return None
    return _delete(ctx, k)


_STORE_SIZE = {"strb": 1, "sturb": 1, "strh": 2, "sturh": 2}


def _access(ins: Instruction):
    """(base, displacement, total bytes) for a plain [base, #d] access, else None."""
    mem = ins.operands[-1] if ins.operands else None
    if (not isinstance(mem, Mem) or mem.index is not None or mem.mode is not AddrMode.OFFSET
            or (mem.offset is not None and not isinstance(mem.offset, Imm))):
        return None
    data = [op for op in ins.operands[:-1] if isinstance(op, Reg)]
    if not data:
        return None
    m = ins.mnemonic
    size = _STORE_SIZE.get(m) or _LOAD_SIZE.get(m) or data[0].reg.width // 8
    return mem.base, mem.displacement, size * len(data), size


_LOAD_SIZE = {"ldrb": 1, "ldurb": 1, "ldrh": 2, "ldurh": 2, "ldrsb": 1, "ldursb": 1,
              "ldrsh": 2, "ldursh": 2, "ldrsw": 4, "ldursw": 4, "ldpsw": 4}


def _overlap(a0, a1, b0, b1) -> bool:
    return a0 < b1 and b0 < a1


def dead_frame_store(ctx: Context, k: int):
    frame = ctx.frame
    ins = ctx.instrs[k]
    if frame is None or frame.escapes or ins.mnemonic not in STORES:
        return None
    if not frame.sub_index < k < frame.add_index:
        return None
    acc = _access(ins)
    if acc is None or acc[0] != SP:
        return None
    _, disp, total, _ = acc
    if disp < 0 or disp + total > frame.size:
        return None
    for j in range(k + 1, frame.add_index):
        other = ctx.instrs[j]
        if other.mnemonic in LOADS:
            oacc = _access(other)
            if oacc is None:
                if any(isinstance(op, Mem) and op.base == SP for op in other.operands):
                    return None
                continue
            if oacc[0] == SP and _overlap(disp, disp + total, oacc[1], oacc[1] + oacc[2]):
                return None
    return _delete(ctx, k)


def remove_nop(ctx: Context, k: int):
    return _delete(ctx, k) if ctx.instrs[k].mnemonic == "nop" else None


# ------------------------------------------------------------ combine


def _source_positions(ins: Instruction) -> list:
    """Indices of operands that only read registers."""
    m = ins.mnemonic
    n = len(ins.operands)
    if m in STORES:
        return list(range(n))
    if m in LOADS:
        return [n - 1]
    if m in ("cmp", "cmn", "tst", "ccmp", "ccmn", "cbz", "cbnz", "tbz", "tbnz"):
        return list(range(n))
    if m in ("ret", "br", "blr", "bl", "b") or m.startswith("b."):
        return []
    return list(range(1, n))


def _substitute(op, old_slot, new: Register, mov_width: int):
    """Rewrite reads of ``old_slot`` inside ``op`` to ``new``; None if not applicable."""
    def swap(reg: Register) -> Optional[Register]:
        if reg.slot != old_slot or reg.is_zero:
            return None
        if reg.width > mov_width:
            return None
        return new.with_width(reg.width)

    if isinstance(op, Reg):
        r = swap(op.reg)
        return Reg(r) if r else None
    if isinstance(op, ShiftedReg):
        r = swap(op.reg)
        return ShiftedReg(r, op.shift, op.amount) if r else None
    if isinstance(op, ExtendedReg):
        r = swap(op.reg)
        return ExtendedReg(r, op.extend, op.amount) if r else None
    if isinstance(op, Mem):
        if op.mode is not AddrMode.OFFSET:
            return None
        base = swap(op.base)
        if base is not None:
            return Mem(base, op.index, op.offset, op.mode)
        if op.index is not None:
            idx = swap(op.index.reg)
            if idx is not None:
                return Mem(op.base, MemIndex(idx, op.index.op, op.index.amount),
                           op.offset, op.mode)
    return None


def copy_propagate(ctx: Context, k: int):
    ins = ctx.instrs[k]
    if ctx.infos[k].opaque:
        return None
    for pos in _source_positions(ins):
        op = ins.operands[pos]
        for reg in _regs(op):
            if reg.slot is None or not reg.is_gpr:
                continue
            j = ctx.reaching_def(k, reg.slot)
            if j is None:
                continue
            src = ctx.instrs[j]
            if (src.mnemonic != "mov" or len(src.operands) != 2
                    or not _plain_gpr(src.operands[0]) or not _plain_gpr(src.operands[1])):
                continue
            rd, rs = src.operands[0].reg, src.operands[1].reg
            if rd.slot != reg.slot or rs.slot == rd.slot:
                continue
            if ctx.defined_between(j + 1, k, rs.slot):
                continue
            new_op = _substitute(op, reg.slot, rs, rd.width)
            if new_op is None:
                continue
            ops = list(ins.operands)
            ops[pos] = new_op
            return _replace(ctx, k, Instruction(ins.mnemonic, tuple(ops)))
    return None


def _regs(op) -> list:
    if isinstance(op, (Reg, ShiftedReg, ExtendedReg)):
        return [op.reg]
    if isinstance(op, Mem):
        return [op.base] + ([op.index.reg] if op.index is not None else [])
    return []


def coalesce_move(ctx: Context, k: int):
    """``op t, ...; mov d, t`` with t dead afterwards → ``op d, ...``."""
    ins = ctx.instrs[k]
    if ins.mnemonic != "mov" or len(ins.operands) != 2:
        return None
    d, t = ins.operands
    if not (_plain_gpr(d) and _plain_gpr(t)) or d.reg.width != t.reg.width:
        return None
    if d.reg.slot == t.reg.slot or ctx.is_live_after(k, t.reg.slot):
        return None
    j = ctx.reaching_def(k, t.reg.slot)
    if j is None:
        return None
    src, info = ctx.instrs[j], ctx.infos[j]
    if (info.opaque or info.writeback or len(info.defs) != 1 or src.mnemonic in RMW_DEST
            or info.defs[0].slot != t.reg.slot or not isinstance(src.operands[0], Reg)):
        return None
    wj = info.defs[0].width
    if wj > d.reg.width:
        return None
    if ctx.used_between(j + 1, k, t.reg.slot):
        return None
    if ctx.used_between(j + 1, k, d.reg.slot) or ctx.defined_between(j + 1, k, d.reg.slot):
        return None
    new_src = Instruction(src.mnemonic, (Reg(d.reg.with_width(wj)),) + src.operands[1:])
    out = _replace(ctx, j, new_src)
    out.update(_delete(ctx, k))
    return out


def _reaching_shift(ctx: Context, k: int, reg: Register, mnemonics):
    """The ``<shift> reg, a, #n`` defining ``reg`` before k, with ``a`` unchanged since."""
    j = ctx.reaching_def(k, reg.slot)
    if j is None:
        return None
    src = ctx.instrs[j]
    ops = src.operands
    if (src.mnemonic not in mnemonics or len(ops) != 3 or not isinstance(ops[2], Imm)
            or not _plain_gpr(ops[1]) or ops[0].reg != reg):
        return None
    a = ops[1].reg
    if a.slot == reg.slot or ctx.defined_between(j + 1, k, a.slot):
        return None
    return j, src.mnemonic, a, ops[2].value


def merge_shifts(ctx: Context, k: int):
    ins = _simple_alu(ctx, k, {"lsl", "lsr"})
    if ins is None:
        return None
    d, t, n2 = ins.operands
    if not isinstance(n2, Imm) or not _plain_gpr(t) or n2.value == 0:
        return None
    found = _reaching_shift(ctx, k, t.reg, {ins.mnemonic})
    if found is None:
        return None
    _, _, a, n1 = found
    if a.width != t.reg.width or n1 + n2.value >= d.reg.width:
        return None
    return _replace(ctx, k, _ins(ins.mnemonic, d, Reg(a), Imm.of(n1 + n2.value)))


def add_self_shift(ctx: Context, k: int):
    """``lsl t, a, #n; add d, t, t`` with t dead → ``lsl d, a, #n+1``."""
    ins = _simple_alu(ctx, k, {"add"})
    if ins is None:
        return None
    d, t, t2 = ins.operands
    if not (_plain_gpr(t) and t == t2) or ctx.is_live_after(k, t.reg.slot):
        return None
    found = _reaching_shift(ctx, k, t.reg, {"lsl"})
    if found is None:
        return None
    _, _, a, n1 = found
    if a.width != d.reg.width or n1 + 1 >= d.reg.width:
        return None
    return _replace(ctx, k, _ins("lsl", d, Reg(a), Imm.of(n1 + 1)))


_SEXT = {8: "sxtb", 16: "sxth", 32: "sxtw"}
_ZEXT = {8: "uxtb", 16: "uxth"}


def shift_pair_extend(ctx: Context, k: int):
    """``lsl t, a, #n; asr|lsr d, t, #n`` → sign/zero extension of the low bits."""
    ins = _simple_alu(ctx, k, {"asr", "lsr"})
    if ins is None:
        return None
    d, t, n = ins.operands
    if not isinstance(n, Imm) or not _plain_gpr(t) or not n.value:
        return None
    found = _reaching_shift(ctx, k, t.reg, {"lsl"})
    if found is None or found[3] != n.value:
        return None
    a = found[2]
    w = d.reg.width
    if a.width != w:
        return None
    bits = w - n.value
    if ins.mnemonic == "asr":
        name = _SEXT.get(bits)
        if name is None or (name == "sxtw" and w != 64):
            return None
        return _replace(ctx, k, _ins(name, d, Reg(a.with_width(32))))
    if bits == 32:
        return _replace(ctx, k, _ins("mov", Reg(d.reg.with_width(32)), Reg(a.with_width(32))))
    name = _ZEXT.get(bits)
    if name is None:
        return None
    return _replace(ctx, k, _ins(name, Reg(d.reg.with_width(32)), Reg(a.with_width(32))))


# ------------------------------------------------------------ address mode

_FORWARD = {
    "ldrb": "uxtb", "ldurb": "uxtb", "ldrh": "uxth", "ldurh": "uxth",
    "ldrsb": "sxtb", "ldursb": "sxtb", "ldrsh": "sxth", "ldursh": "sxth",
    "ldrsw": "sxtw", "ldursw": "sxtw",
}
_SINGLE_STORES = {"str", "stur", "strb", "sturb", "strh", "sturh", "stp"}
_SINGLE_LOADS = {"ldr", "ldur", "ldrb", "ldurb", "ldrh", "ldurh", "ldrsb", "ldursb",
                 "ldrsh", "ldursh", "ldrsw", "ldursw"}


def forward_store_to_load(ctx: Context, k: int):
    ins = ctx.instrs[k]
    if ins.mnemonic not in _SINGLE_LOADS or len(ins.operands) != 2:
        return None
    acc = _access(ins)
    if acc is None or acc[0] != SP:
        return None
    _, ld_disp, ld_size, _ = acc
    dest = ins.operands[0].reg
    if dest.is_fp:
        return None
    frame_private = ctx.frame is not None and not ctx.frame.escapes
    for j in range(k - 1, -1, -1):
        prev, info = ctx.instrs[j], ctx.infos[j]
        if info.opaque or "sp" in info.def_slots():
            return None
        if not info.stores:
            continue
        pacc = _access(prev)
        if pacc is None or pacc[0] != SP:
            if frame_private and not any(isinstance(op, Mem) and op.base == SP
                                         for op in prev.operands):
                continue
            return None
        _, st_disp, st_total, st_size = pacc
        if not _overlap(ld_disp, ld_disp + ld_size, st_disp, st_disp + st_total):
            continue
        if prev.mnemonic not in _SINGLE_STORES:
            return None
        slot_index, rem = divmod(ld_disp - st_disp, st_size)
        if rem or ld_size > st_size:
            return None
        src = prev.operands[slot_index].reg
        if src.is_fp:
            return None
        if not src.is_zero and ctx.defined_between(j + 1, k, src.slot):
            return None
        return _replace(ctx, k, _forwarded(ins.mnemonic, dest, src, ld_size, st_size))
    return None


def _forwarded(m: str, dest: Register, src: Register, ld_size: int, st_size: int):
    if src.is_zero:
        return _mov(dest, _zero(dest.width))
    if m in _FORWARD:
        name = _FORWARD[m]
        if name.startswith("u"):
            return _ins(name, Reg(dest), Reg(src.with_width(32)))
        return _ins(name, Reg(dest), Reg(src.with_width(32)))
    if dest.width == 32:
        return _mov(dest, Reg(src.with_width(32)))
    return _mov(dest, Reg(src.with_width(64)))


def fold_index_extend(ctx: Context, k: int):
    """``sxtw xi, ws`` (or ``mov wi, ws``) feeding ``[xb, xi{, lsl #n}]`` → ``[xb, ws, sxtw|uxtw #n]``."""
    ins = ctx.instrs[k]
    if ctx.infos[k].opaque:
        return None
    for pos, op in enumerate(ins.operands):
        if not isinstance(op, Mem) or op.index is None or op.mode is not AddrMode.OFFSET:
            continue
        idx = op.index
        if idx.reg.width != 64 or idx.op not in (None, "lsl") or idx.reg.slot == op.base.slot:
            continue
        j = ctx.reaching_def(k, idx.reg.slot)
        if j is None:
            continue
        src = ctx.instrs[j]
        if len(src.operands) != 2 or not all(_plain_gpr(o) for o in src.operands):
            continue
        s = src.operands[1].reg
        if src.mnemonic == "sxtw" and src.operands[0].reg.width == 64:
            ext = "sxtw"
        elif src.mnemonic == "mov" and src.operands[0].reg.width == 32 and s.width == 32:
            ext = "uxtw"
        else:
            continue
        if s.slot == src.operands[0].reg.slot or ctx.defined_between(j + 1, k, s.slot):
            continue
        new_mem = Mem(op.base, MemIndex(s.with_width(32), ext, idx.amount), op.offset, op.mode)
        ops = list(ins.operands)
        ops[pos] = new_mem
        return _replace(ctx, k, Instruction(ins.mnemonic, tuple(ops)))
    return None


def remove_frame(ctx: Context, k: int):
    frame = ctx.frame
    if frame is None or k != frame.sub_index:
        return None
    for j, info in enumerate(ctx.infos):
        if j in (frame.sub_index, frame.add_index):
            continue
        if info.opaque or "sp" in info.use_slots() or "sp" in info.def_slots():
            return None
    out = {ctx.item_index(frame.sub_index): [], ctx.item_index(frame.add_index): []}
    for i, item in enumerate(ctx.items):
        if isinstance(item, Directive) and item.text.split()[0] == ".cfi_def_cfa_offset":
            out[i] = []
    return out


RULES = (
    RewriteRule("fold-constant", CONSTANT_FOLDING, fold_constant),
    RewriteRule("propagate-constant", CONSTANT_FOLDING, propagate_constant),
    RewriteRule("algebraic-identity", ALGEBRAIC_LAWS, algebraic_identity),
    RewriteRule("strength-reduce", STRENGTH_REDUCTION, strength_reduce),
    RewriteRule("self-move", NULL_SEQUENCES, self_move),
    RewriteRule("shift-by-zero", NULL_SEQUENCES, shift_by_zero),
    RewriteRule("remove-nop", NULL_SEQUENCES, remove_nop),
    RewriteRule("dead-instruction", NULL_SEQUENCES, dead_instruction),
    RewriteRule("dead-frame-store", NULL_SEQUENCES, dead_frame_store),
    RewriteRule("copy-propagate", COMBINE_OPERATIONS, copy_propagate),
    RewriteRule("coalesce-move", COMBINE_OPERATIONS, coalesce_move),
    RewriteRule("merge-shifts", COMBINE_OPERATIONS, merge_shifts),
    RewriteRule("add-self-shift", COMBINE_OPERATIONS, add_self_shift),
    RewriteRule("shift-pair-extend", COMBINE_OPERATIONS, shift_pair_extend),
    RewriteRule("forward-store-load", ADDRESS_MODE, forward_store_to_load),
    RewriteRule("fold-index-extend", ADDRESS_MODE, fold_index_extend),
    RewriteRule("remove-frame", ADDRESS_MODE, remove_frame),
)
