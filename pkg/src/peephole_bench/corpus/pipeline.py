"""Pairing, normalization, sampling and persistence of basic-block samples."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from ..asm.model import Instruction, Label, ParseError, is_terminator
from ..asm.parser import parse_block, parse_line, split_lines, strip_comment
from ..asm.printer import print_block
from ..peephole import optimize
from .synth import random_block_text

log = logging.getLogger(__name__)

MAX_LINES = 15
NORMALIZER_VERSION = (
    "norm-1: drop directive lines except .cfi_*; keep labels; "
    "drop blocks over 15 instruction lines; dedupe by content hash"
)
SYNTHETIC_TAG = "synthetic"


class UnparseableFile(ValueError):
    def __init__(self, file: str, line: int, message: str):
        super().__init__(f"{file or '<input>'}:{line}: {message}")
        self.file = file
        self.line = line


class NotEnoughSamples(ValueError):
    pass


def content_id(nonopt: str, opt: str) -> str:
    return hashlib.sha256(f"{nonopt}\x00{opt}".encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Source:
    kind: str  # "ingested" | "synthetic"
    tag: str
    file: str = ""
    function: str = ""
    block_ordinal: int = 0
    seed: Optional[int] = None

    def to_json(self) -> dict:
        if self.kind == "synthetic":
            return {"kind": self.kind, "tag": self.tag, "seed": self.seed,
                    "index": self.block_ordinal}
        return {"kind": self.kind, "tag": self.tag, "file": self.file,
                "function": self.function, "block_ordinal": self.block_ordinal}

    @classmethod
    def from_json(cls, d: dict) -> "Source":
        if d["kind"] == "synthetic":
            return cls("synthetic", d.get("tag", SYNTHETIC_TAG), seed=d.get("seed"),
                       block_ordinal=d.get("index", 0))
        return cls("ingested", d.get("tag", ""), d.get("file", ""), d.get("function", ""),
                   d.get("block_ordinal", 0))


def mnemonic_histogram(text: str) -> dict:
    counts = Counter(parse_block(text).mnemonics())
    return dict(sorted(counts.items()))


@dataclass(frozen=True)
class SamplePair:
    nonopt: str
    opt: str
    source: Source
    id: str = ""
    mnemonic_histogram: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.id:
            object.__setattr__(self, "id", content_id(self.nonopt, self.opt))
        if not self.mnemonic_histogram:
            object.__setattr__(self, "mnemonic_histogram", mnemonic_histogram(self.nonopt))

    @property
    def source_tag(self) -> str:
        return self.source.tag

    def to_json(self) -> dict:
        return {"id": self.id, "source": self.source.to_json(), "nonopt": self.nonopt,
                "opt": self.opt, "histogram": self.mnemonic_histogram}

    @classmethod
    def from_json(cls, d: dict) -> "SamplePair":
        return cls(d["nonopt"], d["opt"], Source.from_json(d["source"]), d.get("id", ""),
                   d.get("histogram") or {})


# ------------------------------------------------------------- extraction

_FUNC_END = re.compile(r"^\.Lfunc_end\d*$")


@dataclass(frozen=True)
class SkipRecord:
    file: str
    function: str
    reason: str


def _functions(text: str, file: str) -> dict:
    """function name -> list of blocks, each block a list of cleaned lines."""
    funcs: dict = {}
    blocks: Optional[list] = None
    current: list = []

    def close():
        if blocks is not None and current:
            blocks.append(list(current))
        current.clear()

    for no, raw in enumerate(text.split("\n"), start=1):
        line = strip_comment(raw).strip()
        if not line:
            continue
        try:
            item = parse_line(line, no)
        except ParseError as exc:
            if blocks is None:
                continue  # outside any function: file preamble, data sections
            raise UnparseableFile(file, no, str(exc)) from exc
        if isinstance(item, Label):
            name = item.name
            if _FUNC_END.match(name):
                close()
                blocks = None
                continue
            if not name.startswith(".L"):
                close()
                blocks = funcs.setdefault(name, [])
                continue
            if blocks is None:
                continue
            close()
            current.append(line)
            continue
        if blocks is None:
            continue
        if isinstance(item, Instruction):
            current.append(line)
            if is_terminator(item.mnemonic):
                close()
        elif line.startswith(".cfi_endproc"):
            current.append(line)
            close()
            blocks = None
        else:
            current.append(line)
    close()
    # blocks holding only labels/directives carry no code
    return {name: [b for b in bl if _has_instruction(b)] for name, bl in funcs.items()}


def _has_instruction(lines: list) -> bool:
    return any(isinstance(parse_line(line), Instruction) for line in lines)


def extract_pairs(nonopt_asm: str, opt_asm: str, file: str = "", tag: str = "",
                  skips: Optional[list] = None) -> list:
    """Match blocks of two listings by (function, block ordinal).

    Functions missing from one side or whose block counts differ are skipped
    and logged; ``skips`` (if given) collects the reasons.
    """
    left = _functions(nonopt_asm, file)
    right = _functions(opt_asm, file)
    tag = tag or (Path(file).stem.split(".")[0] if file else "ingested")
    pairs = []

    def skip(func: str, reason: str):
        log.info("skip %s:%s: %s", file or "<input>", func, reason)
        if skips is not None:
            skips.append(SkipRecord(file, func, reason))

    for func in sorted(set(left) | set(right), key=lambda f: (f not in left, f)):
        if func not in left:
            skip(func, "function only in optimized listing")
            continue
        if func not in right:
            skip(func, "function only in non-optimized listing")
            continue
        a, b = left[func], right[func]
        if len(a) != len(b):
            skip(func, f"block count differs ({len(a)} vs {len(b)}): CFG changed")
            continue
        for ordinal, (na, nb) in enumerate(zip(a, b)):
            pairs.append(SamplePair("\n".join(na), "\n".join(nb),
                                    Source("ingested", tag, file, func, ordinal)))
    return pairs


# ---------------------------------------------------------- normalization


def strip_metadata(text: str) -> str:
    """Drop directive lines except ``.cfi_*``; labels and instructions stay."""
    kept = []
    for raw in split_lines(text):
        line = strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith(".") and not line.endswith(":") and not line.startswith(".cfi_"):
            continue
        kept.append(line)
    return "\n".join(kept)


def instruction_count(text: str) -> int:
    if not text.strip():
        return 0
    return len(parse_block(text))


def normalize(pairs: Iterable[SamplePair], max_lines: int = MAX_LINES) -> list:
    out, seen = [], set()
    for pair in pairs:
        nonopt, opt = strip_metadata(pair.nonopt), strip_metadata(pair.opt)
        n = instruction_count(nonopt)
        if n == 0 or n > max_lines or instruction_count(opt) == 0:
            continue
        new = SamplePair(nonopt, opt, pair.source)
        if new.id in seen:
            continue
        seen.add(new.id)
        out.append(new)
    return out


# ----------------------------------------------------------------- dataset


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


class Dataset:
    """Ordered, id-unique collection of pairs plus a manifest."""

    def __init__(self, pairs: Iterable[SamplePair], manifest: Optional[dict] = None):
        self.pairs = list(pairs)
        ids = [p.id for p in self.pairs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample ids")
        base = {"created": _now(), "normalization": NORMALIZER_VERSION}
        base.update(manifest or {})
        base["counts"] = dict(sorted(Counter(p.source_tag for p in self.pairs).items()))
        base["n"] = len(self.pairs)
        base["content_hash"] = hashlib.sha256("\n".join(ids).encode()).hexdigest()
        self.manifest = base

    @classmethod
    def from_pairs(cls, pairs: Iterable[SamplePair], manifest: Optional[dict] = None) -> "Dataset":
        unique, seen = [], set()
        for p in pairs:
            if p.id not in seen:
                seen.add(p.id)
                unique.append(p)
        return cls(unique, manifest)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def by_id(self) -> dict:
        return {p.id: p for p in self.pairs}

    def manifest_hash(self) -> str:
        """Hash of the manifest without its creation time."""
        stable = {k: v for k, v in self.manifest.items() if k != "created"}
        return hashlib.sha256(json.dumps(stable, sort_keys=True).encode()).hexdigest()

    def check(self, max_lines: int = MAX_LINES) -> None:
        for p in self.pairs:
            parse_block(p.opt)
            if instruction_count(p.nonopt) > max_lines:
                raise ValueError(f"sample {p.id} exceeds {max_lines} instruction lines")

    def save(self, path) -> Path:
        path = Path(path)
        self.check()
        path.parent.mkdir(parents=True, exist_ok=True)
        body = "".join(json.dumps(p.to_json(), sort_keys=True) + "\n" for p in self.pairs)
        _atomic_write(path, body)
        _atomic_write(manifest_path(path), json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "Dataset":
        path = Path(path)
        pairs = [SamplePair.from_json(json.loads(line))
                 for line in path.read_text().splitlines() if line.strip()]
        mpath = manifest_path(path)
        manifest = json.loads(mpath.read_text()) if mpath.exists() else {}
        return cls(pairs, manifest)


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


# ----------------------------------------------------------------- sampling


def _rank(seed, sample_id: str) -> str:
    return hashlib.sha256(f"{seed}:{sample_id}".encode()).hexdigest()


def sample(dataset: Dataset, n: int, seed) -> Dataset:
    """Uniform sample without replacement keyed by id hash, not position."""
    if n < 0 or n > len(dataset):
        raise NotEnoughSamples(f"requested {n} of {len(dataset)} samples")
    chosen = sorted(dataset.pairs, key=lambda p: _rank(seed, p.id))[:n]
    manifest = {k: v for k, v in dataset.manifest.items()
                if k not in ("counts", "n", "content_hash")}
    manifest["sample"] = {"n": n, "seed": seed}
    return Dataset(chosen, manifest)


# ---------------------------------------------------------------- synthesis


def synth_blocks(count: int, seed: int, max_len: int = MAX_LINES) -> list:
    """``count`` distinct synthetic pairs whose opt side is the engine's output."""
    if not 1 <= max_len <= MAX_LINES:
        raise ValueError(f"max_len must be in 1..{MAX_LINES}")
    rng = random.Random(seed)
    pairs, seen = [], set()
    attempts = 0
    while len(pairs) < count:
        attempts += 1
        if attempts > 50 * count + 100:
            raise RuntimeError("generator cannot produce enough distinct blocks")
        block = parse_block(random_block_text(rng, max_len))
        opt, _ = optimize(block)
        if len(opt) == 0:
            continue
        pair = SamplePair(print_block(block), print_block(opt),
                          Source("synthetic", SYNTHETIC_TAG, seed=seed, block_ordinal=len(pairs)))
        if pair.id in seen:
            continue
        seen.add(pair.id)
        pairs.append(pair)
    return pairs


def synthetic_dataset(count: int, seed: int, max_len: int = MAX_LINES) -> Dataset:
    return Dataset(synth_blocks(count, seed, max_len),
                   {"generator": {"count": count, "seed": seed, "max_len": max_len}})


# ------------------------------------------------------------------- stats


def corpus_stats(pairs: Iterable[SamplePair], side: str = "nonopt") -> dict:
    """Mnemonic counts over non-optimized (or ``side="opt"``) blocks, most
    frequent first."""
    total: Counter = Counter()
    for p in pairs:
        total.update(p.mnemonic_histogram if side == "nonopt" else mnemonic_histogram(p.opt))
    return dict(sorted(total.items(), key=lambda kv: (-kv[1], kv[0])))


# --------------------------------------------------------------- ingestion


@dataclass
class IngestResult:
    pairs: list = field(default_factory=list)
    skips: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # UnparseableFile instances


def _ingest_one(nonopt_path: Path, opt_path: Path, tag: str):
    skips: list = []
    try:
        pairs = extract_pairs(nonopt_path.read_text(), opt_path.read_text(),
                              str(nonopt_path.name), tag, skips)
    except UnparseableFile as exc:
        return [], skips, exc
    return pairs, skips, None


def ingest_directory(directory, tag: str = "", jobs: int = 1) -> IngestResult:
    """Read ``<name>.O0.s`` / ``<name>.opt.s`` file pairs from a directory."""
    directory = Path(directory)
    tag = tag or directory.name
    result = IngestResult()
    work = []
    for nonopt in sorted(directory.glob("*.O0.s")):
        name = nonopt.name[: -len(".O0.s")]
        opt = directory / f"{name}.opt.s"
        if not opt.exists():
            result.skips.append(SkipRecord(nonopt.name, "", "no matching .opt.s file"))
            continue
        work.append((nonopt, opt))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        outcomes = list(pool.map(lambda w: _ingest_one(w[0], w[1], tag), work))
    for pairs, skips, err in outcomes:
        result.pairs.extend(pairs)
        result.skips.extend(skips)
        if err is not None:
            result.errors.append(err)
    return result
