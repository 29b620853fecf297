"""Fixpoint driver over the rule set."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from ..asm.model import BasicBlock, Instruction, Register, RegKind
from ..asm.printer import format_item
from .analysis import Context, instr_info
from .rules import RULES

ITERATION_CAP = 32
_REWRITES_PER_PASS = 256


class IterationCapExceeded(RuntimeError):
    """Raised by ``optimize(strict=True)`` when the fixpoint is not reached."""

    def __init__(self, block: BasicBlock, trace: "OptimizationTrace"):
        super().__init__(f"no fixpoint after {trace.iterations} iterations")
        self.block = block
        self.trace = trace


@dataclass(frozen=True)
class TraceEntry:
    rule: str
    category: str
    before: tuple
    after: tuple

    def to_json(self) -> dict:
        return {"rule": self.rule, "category": self.category,
                "before": list(self.before), "after": list(self.after)}


@dataclass
class OptimizationTrace:
    applied: list = field(default_factory=list)
    iterations: int = 0
    cap_exceeded: bool = False

    def to_json(self) -> dict:
        out = {"iterations": self.iterations,
               "applied": [e.to_json() for e in self.applied]}
        if self.cap_exceeded:
            out["diagnostic"] = "IterationCapExceeded"
        return out


def _apply(items: list, rewrite: dict) -> tuple:
    lo, hi = min(rewrite), max(rewrite)
    before = tuple(format_item(it) for it in items[lo:hi + 1])
    out = []
    window_after = []
    for i, item in enumerate(items):
        repl = rewrite.get(i, [item])
        out.extend(repl)
        if lo <= i <= hi:
            window_after.extend(repl)
    return out, before, tuple(format_item(it) for it in window_after)


def _first_match(ctx: Context, k: int):
    for rule in RULES:
        rewrite = rule.apply(ctx, k)
        if rewrite:
            return rule, rewrite
    return None


def apply_rules_once(block: BasicBlock):
    """One rewriting pass.

    Positions are scanned left to right and the first rule in priority order
    fires; after a rewrite the facts are recomputed and the scan restarts at
    the leftmost position, so a pass ends when a full scan finds nothing
    (or the per-pass rewrite budget is spent).

    Returns ``(block, changed, steps)`` where ``steps`` lists trace entries.
    """
    items = list(block.items)
    steps: list = []
    k = 0
    ctx = Context(items)
    while k < len(ctx.instrs) and len(steps) < _REWRITES_PER_PASS:
        match = _first_match(ctx, k)
        if match is None:
            k += 1
            continue
        rule, rewrite = match
        items, before, after = _apply(items, rewrite)
        steps.append(TraceEntry(rule.name, rule.category, before, after))
        ctx = Context(items)
        k = 0
    return BasicBlock(tuple(items)), bool(steps), steps


def rename_result(block: BasicBlock) -> BasicBlock:
    """Rename the block's result register to x0/w0.

    Applies when the block ends in ``ret``, never mentions register 0 and
    its last integer definition targets a caller-saved register.  This is
    the convention of unoptimized listings where the value is computed in a
    scratch register that a later copy moves to w0.
    """
    instrs = block.instructions
    if not instrs or instrs[-1].mnemonic != "ret":
        return block
    if any(r.slot == 0 for ins in instrs for r in ins.regs()):
        return block
    slot = None
    for ins in reversed(instrs):
        gprs = [r for r in instr_info(ins).defs if r.is_gpr and r.slot is not None]
        if gprs:
            slot = gprs[-1].slot
            break
    if slot is None or not 1 <= slot <= 18:
        return block
    mapping = {slot: 0}
    return BasicBlock(tuple(_rename_item(it, mapping) for it in block.items))


def _rename_item(item, mapping: dict):
    if not isinstance(item, Instruction):
        return item
    return Instruction(item.mnemonic, tuple(_rename_operand(op, mapping) for op in item.operands))


def _rename_reg(reg: Register, mapping: dict) -> Register:
    if reg.kind in (RegKind.GPR32, RegKind.GPR64) and reg.index in mapping:
        return Register(reg.kind, mapping[reg.index])
    return reg


def _rename_operand(op, mapping: dict):
    if isinstance(op, Register):
        return _rename_reg(op, mapping)
    if not hasattr(op, "__dataclass_fields__"):
        return op
    changes = {}
    for f in fields(op):
        v = getattr(op, f.name)
        if isinstance(v, Register):
            changes[f.name] = _rename_reg(v, mapping)
        elif hasattr(v, "__dataclass_fields__"):
            changes[f.name] = _rename_operand(v, mapping)
    return replace(op, **changes) if changes else op


def optimize(block: BasicBlock, rename_result_register: bool = False,
             strict: bool = False, cap: int = ITERATION_CAP):
    """Iterate :func:`apply_rules_once` to a fixpoint (at most ``cap`` passes).

    Returns ``(block, trace)``.  When the cap is hit the last block is still
    returned and ``trace.cap_exceeded`` is set; ``strict`` turns that into an
    :class:`IterationCapExceeded` exception.
    """
    trace = OptimizationTrace()
    if rename_result_register:
        renamed = rename_result(block)
        if renamed != block:
            trace.applied.append(TraceEntry(
                "rename-result", "ResultConvention",
                tuple(format_item(i) for i in block.items),
                tuple(format_item(i) for i in renamed.items)))
        block = renamed
    while True:
        if trace.iterations >= cap:
            trace.cap_exceeded = True
            if strict:
                raise IterationCapExceeded(block, trace)
            break
        new, changed, steps = apply_rules_once(block)
        trace.iterations += 1
        trace.applied.extend(steps)
        block = new
        if not changed:
            break
    return block, trace
