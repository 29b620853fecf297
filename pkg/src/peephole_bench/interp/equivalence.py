"""Observable effects and randomized differential equivalence."""
from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..asm.model import BasicBlock, Imm, Instruction, Reg, SP, is_terminator
from .machine import (
    ExecutionResult,
    MachineState,
    TerminatorOutcome,
    init_state,
    run_block,
)

DEFAULT_TRIALS = 100
DEFAULT_SEED = 0xC0FFEE


def _sp_adjust(instr: Instruction, mnemonic: str) -> Optional[int]:
    ops = instr.operands
    if (instr.mnemonic == mnemonic and len(ops) == 3 and ops[0] == Reg(SP)
            and ops[1] == Reg(SP) and isinstance(ops[2], Imm) and ops[2].value is not None
            and ops[2].value > 0):
        return ops[2].value
    return None


def own_frame(block: BasicBlock) -> int:
    """Size of the frame claimed by a leading ``sub sp, sp, #k`` and released
    by a trailing ``add sp, sp, #k`` (before any terminator); 0 if absent."""
    instrs = block.instructions
    if len(instrs) < 2:
        return 0
    k = _sp_adjust(instrs[0], "sub")
    if k is None:
        return 0
    last = len(instrs) - 1
    if is_terminator(instrs[last].mnemonic):
        last -= 1
    if last <= 0 or _sp_adjust(instrs[last], "add") != k:
        return 0
    return k


@dataclass(frozen=True)
class EffectSet:
    registers: tuple  # ((name, value), ...)
    outcome: Optional[TerminatorOutcome]
    stores: tuple  # sorted multiset of (address, width, value)

    def describe_difference(self, other: "EffectSet") -> str:
        if self.registers != other.registers:
            diffs = [f"{n}: {hex(a)} vs {hex(b)}"
                     for (n, a), (_, b) in zip(self.registers, other.registers) if a != b]
            return "register " + ", ".join(diffs)
        if self.outcome != other.outcome:
            return f"terminator {self.outcome} vs {other.outcome}"
        mine, theirs = Counter(self.stores), Counter(other.stores)
        only_a = sorted((mine - theirs).elements())
        only_b = sorted((theirs - mine).elements())
        return f"stores only in first: {_fmt_stores(only_a)}; only in second: {_fmt_stores(only_b)}"


def _fmt_stores(stores) -> str:
    return "[" + ", ".join(f"({hex(a)}, {w}, {hex(v)})" for a, w, v in stores) + "]"


def observable_effects(result: ExecutionResult, block: BasicBlock,
                       observe: Sequence[str] = ("x0",)) -> EffectSet:
    frame = own_frame(block)
    lo, hi = result.initial_sp - frame, result.initial_sp
    stores = sorted(
        (s.address, s.width, s.value) for s in result.stores
        if not (frame and lo <= s.address and s.address + s.width <= hi)
    )
    regs = tuple((name, result.final.reg(name)) for name in observe)
    return EffectSet(regs, result.terminator_outcome, tuple(stores))


@dataclass(frozen=True)
class EquivalenceVerdict:
    kind: str  # Equivalent | Divergent | Uncheckable
    detail: str = ""
    witness: Optional[MachineState] = None
    trial: Optional[int] = None
    mismatched_effect: Optional[str] = None

    @property
    def equivalent(self) -> bool:
        return self.kind == "Equivalent"

    @property
    def divergent(self) -> bool:
        return self.kind == "Divergent"

    @property
    def uncheckable(self) -> bool:
        return self.kind == "Uncheckable"

    def to_json(self) -> dict:
        out: dict = {"verdict": self.kind}
        if self.kind == "Divergent":
            out.update({
                "trial": self.trial,
                "seed": self.witness.seed,
                "registers": {k: hex(v) for k, v in self.witness.registers().items()},
                "mismatched_effect": self.mismatched_effect,
            })
        elif self.detail:
            out["reason"] = self.detail
        return out


def trial_seed(seed: int, trial: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{trial}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _static_uncheckable(block: BasicBlock) -> Optional[str]:
    for instr in block.instructions:
        if instr.mnemonic in ("bl", "blr"):
            return "CalledExternal"
    return None


def io_equivalent(a: BasicBlock, b: BasicBlock, trials: int = DEFAULT_TRIALS,
                  seed: int = DEFAULT_SEED, symbols: Optional[Mapping[str, int]] = None,
                  observe: Sequence[str] = ("x0",)) -> EquivalenceVerdict:
    """Run both blocks on ``trials`` seeded states and compare effects.

    ``observe`` widens the compared registers beyond x0; it exists for
    diagnostics and is not used by the metrics.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for blk in (a, b):
        reason = _static_uncheckable(blk)
        if reason:
            return EquivalenceVerdict("Uncheckable", reason)
    for i in range(trials):
        state = init_state(trial_seed(seed, i))
        ra = run_block(state, a, symbols)
        rb = run_block(state, b, symbols)
        for r in (ra, rb):
            if r.trap is not None:
                return EquivalenceVerdict("Uncheckable", f"{r.trap.kind}: {r.trap.detail}")
            if r.terminator_outcome.kind == "CalledExternal":
                return EquivalenceVerdict("Uncheckable", "CalledExternal")
        ea = observable_effects(ra, a, observe)
        eb = observable_effects(rb, b, observe)
        if ea != eb:
            what = ea.describe_difference(eb)
            return EquivalenceVerdict("Divergent", f"trial {i}: {what}", state, i, what)
    return EquivalenceVerdict("Equivalent")
