"""BLEU, exact match, syntactic and IO accuracy, and their aggregation."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from .asm.isa import block_symbols, validate_block
from .asm.model import ParseError
from .asm.parser import parse_block
from .asm.printer import print_block
from .interp.equivalence import DEFAULT_SEED, DEFAULT_TRIALS, io_equivalent

BLEU_CONFIG = "bleu-a4-uniform"
BLEU_MAX_N = 4

_TOKEN = re.compile(r"[,\[\]#:]|[^\s,\[\]#:]+")


class EmptyInput(ValueError):
    pass


def tokenize(text: str) -> list:
    """Whitespace split that also isolates ``, [ ] # :`` as tokens."""
    return _TOKEN.findall(text)


def _ngrams(tokens: list, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str) -> float:
    """Sentence BLEU over assembly tokens.

    Orders 1..4 with uniform weights; orders longer than the candidate are
    dropped and the weights renormalized.  A zero precision at order n ≥ 2
    is smoothed to 1/(total+1); zero unigram overlap scores 0.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    orders = min(BLEU_MAX_N, len(cand))
    log_sum = 0.0
    for n in range(1, orders + 1):
        c_counts = _ngrams(cand, n)
        r_counts = _ngrams(ref, n)
        matched = sum(min(c, r_counts[g]) for g, c in c_counts.items())
        total = len(cand) - n + 1
        if matched == 0:
            if n == 1:
                return 0.0
            matched, total = 1, total + 1
        log_sum += math.log(matched / total) / orders
    c, r = len(cand), len(ref)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return min(1.0, bp * math.exp(log_sum))


def _trim_lines(text: str) -> str:
    return "\n".join(line.rstrip() for line in text.strip("\n").split("\n"))


def canonical_or_raw(text: str):
    """(canonical text, parsed block) when parseable, else (trimmed raw, None)."""
    try:
        block = parse_block(text)
    except ParseError:
        return _trim_lines(text), None
    return print_block(block), block


def emr(candidate: str, reference: str) -> int:
    if not candidate.strip():
        return 0
    c_text, c_block = canonical_or_raw(candidate)
    r_text, r_block = canonical_or_raw(reference)
    if c_block is None or r_block is None:
        return int(_trim_lines(candidate) == _trim_lines(reference))
    return int(c_text == r_text)


@dataclass(frozen=True)
class SampleMetrics:
    bleu: float
    emr: int
    syntactic: int
    io: Optional[int]  # None = uncheckable
    id: str = ""
    source: str = ""
    detail: str = ""

    def to_json(self) -> dict:
        out = asdict(self)
        out["io"] = "uncheckable" if self.io is None else self.io
        return out


def evaluate_sample(pair, candidate: str, trials: int = DEFAULT_TRIALS,
                    seed: int = DEFAULT_SEED, sample_id: str = "",
                    source: str = "") -> SampleMetrics:
    """Score ``candidate`` against the optimized side of ``pair``.

    ``pair`` may be a SamplePair or the reference block text itself.
    """
    reference = getattr(pair, "opt", pair)
    sample_id = sample_id or getattr(pair, "id", "")
    source = source or getattr(pair, "source_tag", "")
    ref_canon, ref_block = canonical_or_raw(reference)
    if not candidate.strip():
        return SampleMetrics(0.0, 0, 0, 0, sample_id, source, "empty candidate")
    cand_canon, cand_block = canonical_or_raw(candidate)
    if cand_block is None or ref_block is None:
        score = bleu(candidate, reference)
    else:
        score = bleu(cand_canon, ref_canon)
    match = emr(candidate, reference)
    if cand_block is None:
        return SampleMetrics(score, match, 0, 0, sample_id, source, "unparseable candidate")
    known = block_symbols(ref_block) if ref_block is not None else None
    report = validate_block(cand_block, known)
    if not report.valid:
        first = report.diagnostics[0]
        return SampleMetrics(score, match, 0, 0, sample_id, source,
                             f"{first.code}: {first.message}")
    if ref_block is None:
        return SampleMetrics(score, match, 1, None, sample_id, source, "unparseable reference")
    verdict = io_equivalent(cand_block, ref_block, trials, seed)
    io = {"Equivalent": 1, "Divergent": 0}.get(verdict.kind)
    return SampleMetrics(score, match, 1, io, sample_id, source, verdict.detail)


@dataclass(frozen=True)
class MetricsSummary:
    n: int
    bleu: float
    emr: float
    syntactic: float
    io: float
    io_uncheckable: int
    bleu_config: str = BLEU_CONFIG

    def to_json(self) -> dict:
        return asdict(self)


def aggregate(records: Iterable[SampleMetrics]) -> MetricsSummary:
    records = list(records)
    if not records:
        raise EmptyInput("aggregate needs at least one record")
    n = len(records)
    checkable = [r.io for r in records if r.io is not None]
    # fsum keeps the mean independent of record order.
    return MetricsSummary(
        n=n,
        bleu=math.fsum(r.bleu for r in records) / n,
        emr=sum(r.emr for r in records) / n,
        syntactic=sum(r.syntactic for r in records) / n,
        io=(sum(checkable) / len(checkable)) if checkable else 0.0,
        io_uncheckable=n - len(checkable),
    )
