"""Error categories for candidate blocks and per-mnemonic error statistics."""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .asm.isa import is_known_mnemonic
from .asm.model import (
    BasicBlock,
    ExtendedReg,
    Imm,
    Instruction,
    LabelRef,
    Mem,
    ParseError,
    Reg,
    ShiftedReg,
)
from .asm.parser import parse_line, split_lines, strip_comment
from .asm.printer import format_instruction, format_operand

OPCODE = "Opcode"
REGISTER = "Register"
IMMEDIATE = "ImmediateValue"
LABEL = "Label"
CATEGORY_ORDER = (OPCODE, REGISTER, IMMEDIATE, LABEL)

SUBSTITUTION = "sub"
INDEL_COST = 0.6
Z_95 = 1.96


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------- lines


@dataclass(frozen=True)
class Line:
    """An instruction line, parsed when possible."""
    text: str
    mnemonic: str
    operands: Optional[tuple]  # None when the line did not parse
    tokens: frozenset

    @classmethod
    def of(cls, item) -> "Line":
        if isinstance(item, Instruction):
            text = format_instruction(item)
            toks = [item.mnemonic] + [format_operand(op) for op in item.operands]
            return cls(text, item.mnemonic, item.operands, frozenset(toks))
        text = " ".join(str(item).split())
        head, _, rest = text.partition(" ")
        toks = [head.lower()] + [t.strip() for t in rest.split(",") if t.strip()]
        return cls(text, head.lower(), None, frozenset(toks))


def block_lines(block: Union[BasicBlock, str]) -> list:
    """Instruction lines of a block; text input is parsed line by line so a
    single unlexable line does not hide the rest."""
    if isinstance(block, BasicBlock):
        return [Line.of(i) for i in block.instructions]
    out = []
    for no, raw in enumerate(split_lines(block), start=1):
        text = strip_comment(raw).strip()
        if not text:
            continue
        try:
            item = parse_line(raw, no)
        except ParseError:
            out.append(Line.of(text))
            continue
        if isinstance(item, Instruction):
            out.append(Line.of(item))
    return out


def _jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def align_instructions(candidate, reference) -> list:
    """Minimum-cost alignment of instruction lines.

    Returns ``(cand_idx | None, ref_idx | None)`` pairs in order.  Costs:
    substitution ``1 - jaccard(tokens)``, insertion/deletion 0.6.
    """
    cand = candidate if isinstance(candidate, list) else block_lines(candidate)
    ref = reference if isinstance(reference, list) else block_lines(reference)
    n, m = len(cand), len(ref)
    cost = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i * INDEL_COST
    for j in range(1, m + 1):
        cost[0][j] = j * INDEL_COST
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = cost[i - 1][j - 1] + 1.0 - _jaccard(cand[i - 1].tokens, ref[j - 1].tokens)
            cost[i][j] = min(sub, cost[i - 1][j] + INDEL_COST, cost[i][j - 1] + INDEL_COST)
    pairs = []
    i, j = n, m
    eps = 1e-12
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = cost[i - 1][j - 1] + 1.0 - _jaccard(cand[i - 1].tokens, ref[j - 1].tokens)
            if abs(cost[i][j] - sub) < eps:
                pairs.append((i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if j > 0 and abs(cost[i][j] - (cost[i][j - 1] + INDEL_COST)) < eps:
            pairs.append((None, j - 1))
            j -= 1
        else:
            pairs.append((i - 1, None))
            i -= 1
    pairs.reverse()
    return pairs


def alignment_cost(candidate, reference) -> float:
    cand = block_lines(candidate)
    ref = block_lines(reference)
    total = 0.0
    for ci, ri in align_instructions(cand, ref):
        if ci is None or ri is None:
            total += INDEL_COST
        else:
            total += 1.0 - _jaccard(cand[ci].tokens, ref[ri].tokens)
    return total


# -------------------------------------------------------- classification


@dataclass(frozen=True)
class ErrorRecord:
    category: str
    candidate_line: Optional[str]
    reference_line: Optional[str]
    token: str
    reference_mnemonic: Optional[str] = None

    def to_json(self) -> dict:
        return {"category": self.category, "candidate_line": self.candidate_line,
                "reference_line": self.reference_line, "token": self.token}


def _reg_text(op) -> Optional[str]:
    if isinstance(op, (Reg, ShiftedReg, ExtendedReg)):
        return op.reg.name
    return None


def _operand_issues(c, r) -> list:
    """(category, token) pairs for one candidate/reference operand pair."""
    ctext = format_operand(c) if c is not None else ""
    if c is not None and r is not None and c == r:
        if isinstance(c, Imm) and c.malformed:
            return [(IMMEDIATE, ctext)]
        return []
    if isinstance(c, Imm) and c.malformed:
        return [(IMMEDIATE, ctext)]
    if isinstance(c, Mem) and isinstance(r, Mem):
        out = []
        if c.base != r.base:
            out.append((REGISTER, c.base.name))
        ci = c.index.reg.name if c.index else None
        ri = r.index.reg.name if r.index else None
        if ci != ri and ci is not None:
            out.append((REGISTER, ci))
        elif (c.index, c.mode) != (r.index, r.mode) and c.index is not None:
            out.append((IMMEDIATE, ctext))
        if c.offset != r.offset:
            if isinstance(c.offset, LabelRef) or isinstance(r.offset, LabelRef):
                out.append((LABEL, format_operand(c.offset) if c.offset else ctext))
            else:
                out.append((IMMEDIATE, format_operand(c.offset) if c.offset else ctext))
        return out or [(IMMEDIATE, ctext)]
    creg, rreg = _reg_text(c), _reg_text(r)
    if creg is not None and rreg is not None:
        if creg != rreg:
            return [(REGISTER, creg)]
        return [(IMMEDIATE, ctext)]  # same register, different shift/extend amount
    if isinstance(c, Imm) or isinstance(r, Imm):
        return [(IMMEDIATE, ctext or format_operand(r))]
    if isinstance(c, LabelRef) or isinstance(r, LabelRef):
        return [(LABEL, ctext or format_operand(r))]
    if creg is not None or isinstance(c, Mem):
        return [(REGISTER, creg or ctext)]
    return [(IMMEDIATE, ctext)] if c is not None else []


def _raw_operand_issues(cline: Line, rline: Line) -> list:
    """Best-effort comparison when the candidate line did not parse."""
    rtoks = [format_operand(op) for op in rline.operands or ()]
    ctoks = [t.strip() for t in cline.text.partition(" ")[2].split(",") if t.strip()]
    out = []
    for i, tok in enumerate(ctoks):
        if i < len(rtoks) and tok == rtoks[i]:
            continue
        if tok.startswith("#"):
            out.append((IMMEDIATE, tok))
        elif tok.startswith(("[", "w", "x", "sp")):
            out.append((REGISTER, tok))
        else:
            out.append((LABEL, tok))
    return out or [(IMMEDIATE, cline.text)]


def _classify_pair(cline: Line, rline: Line) -> list:
    if cline.text == rline.text and cline.operands is not None:
        issues = [_operand_issues(c, c) for c in cline.operands]
        found = [i for sub in issues for i in sub]
    elif cline.mnemonic != rline.mnemonic or not is_known_mnemonic(cline.mnemonic):
        found = [(OPCODE, cline.mnemonic)]
    elif cline.operands is None or rline.operands is None:
        found = _raw_operand_issues(cline, rline)
    else:
        found = []
        cops, rops = cline.operands, rline.operands
        for k in range(max(len(cops), len(rops))):
            c = cops[k] if k < len(cops) else None
            r = rops[k] if k < len(rops) else None
            found.extend(_operand_issues(c, r))
    seen = set()
    records = []
    for cat, tok in sorted(found, key=lambda ct: CATEGORY_ORDER.index(ct[0])):
        if (cat, tok) in seen:
            continue
        seen.add((cat, tok))
        records.append(ErrorRecord(cat, cline.text, rline.text, tok, rline.mnemonic))
    return records


def classify_errors(candidate, reference) -> list:
    """Error records for every aligned line pair that differs.

    Candidate-only lines are reported only when their mnemonic is unknown
    (an Opcode error); missing and surplus valid lines are not categorized.
    """
    cand = block_lines(candidate)
    ref = block_lines(reference)
    records: list = []
    for ci, ri in align_instructions(cand, ref):
        if ci is None:
            continue
        cline = cand[ci]
        if ri is None:
            if not is_known_mnemonic(cline.mnemonic):
                records.append(ErrorRecord(OPCODE, cline.text, None, cline.mnemonic))
            continue
        records.extend(_classify_pair(cline, ref[ri]))
    return records


def category_counts(records: Iterable[ErrorRecord]) -> dict:
    counts = Counter(r.category for r in records)
    return {cat: counts.get(cat, 0) for cat in CATEGORY_ORDER}


# ------------------------------------------------------------ statistics


def confidence_interval(errors: int, total: int, z: float = Z_95):
    """Normal-approximation 95% interval: ``(p, z*sqrt(p(1-p)/n))``."""
    if total <= 0:
        raise DomainError("total must be positive")
    if not 0 <= errors <= total:
        raise DomainError("errors must lie in [0, total]")
    p = errors / total
    return p, z * math.sqrt(p * (1 - p) / total)


@dataclass(frozen=True)
class MnemonicErrorStat:
    mnemonic: str
    error_count: int
    total_count: int
    error_prob: float
    conf_halfwidth: float


def per_mnemonic_error_stats(error_records, corpus_counts: Mapping[str, int],
                             min_samples: int = 50) -> list:
    """Opcode-error probability per reference mnemonic.

    ``error_records`` is an iterable of ErrorRecord (Opcode records are
    counted against their reference mnemonic) or a mapping mnemonic → count.
    Mnemonics with ``total_count <= min_samples`` are dropped.
    """
    if min_samples < 1:
        raise DomainError("min_samples must be >= 1")
    if isinstance(error_records, Mapping):
        errors = Counter(dict(error_records))
    else:
        errors = Counter(r.reference_mnemonic for r in error_records
                         if r.category == OPCODE and r.reference_mnemonic)
    stats = []
    for mnemonic, total in corpus_counts.items():
        if total <= min_samples:
            continue
        count = min(errors.get(mnemonic, 0), total)
        p, half = confidence_interval(count, total)
        stats.append(MnemonicErrorStat(mnemonic, count, total, p, half))
    stats.sort(key=lambda s: (-s.error_prob, s.mnemonic))
    return stats


def top_k(stats: list, k: int = 10) -> list:
    return sorted(stats, key=lambda s: (-s.error_prob, s.mnemonic))[:k]


def bottom_k(stats: list, k: int = 10) -> list:
    return sorted(stats, key=lambda s: (s.error_prob, s.mnemonic))[:k]


_HEADER = ("Instr", "Error Count", "Total Count", "Error Prob", "Conf")


def _rows(stats: list) -> list:
    return [(s.mnemonic, str(s.error_count), str(s.total_count),
             f"{s.error_prob:.6f}", f"{s.conf_halfwidth:.6f}") for s in stats]


def render_stats_text(stats: list) -> str:
    rows = [_HEADER] + _rows(stats)
    widths = [max(len(r[i]) for r in rows) for i in range(len(_HEADER))]
    lines = []
    for n, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def render_stats_csv(stats: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_HEADER)
    writer.writerows(_rows(stats))
    return buf.getvalue()
