"""Command-line entry point: dataset building, candidate generation, scoring, error analysis.

Exit codes: 0 success, 1 internal error, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .adapters import (
    ADAPTERS,
    AdapterConfig,
    AdapterResponse,
    CacheMiss,
    PromptSpec,
    RemoteError,
    build_prompt,
    query_many,
    select_shots,
)
from .asm.isa import block_symbols, validate_block
from .asm.model import ParseError
from .asm.parser import parse_block
from .asm.printer import print_block
from .corpus import (
    MAX_LINES,
    Dataset,
    NotEnoughSamples,
    corpus_stats,
    ingest_directory,
    normalize,
    sample,
    synth_blocks,
)
from .interp import DEFAULT_SEED, DEFAULT_TRIALS, io_equivalent
from .metrics import aggregate, evaluate_sample
from .peephole import optimize
from .taxonomy import (
    bottom_k,
    category_counts,
    classify_errors,
    per_mnemonic_error_stats,
    render_stats_csv,
    render_stats_text,
    top_k,
)

TOOL = "peephole-bench"
EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("peephole_bench")


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    dataset: Optional[str] = None
    adapter: Optional[dict] = None
    shots: Optional[int] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _provenance(config: RunConfig, dataset: Optional[Dataset] = None) -> dict:
    out = {"tool": {"name": TOOL, "version": __version__}, "run_config": config.to_json()}
    if dataset is not None:
        out["dataset_manifest_hash"] = dataset.manifest_hash()
    return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _load_dataset(path) -> Dataset:
    if not path:
        raise InputError("--dataset is required")
    p = Path(path)
    if not p.exists():
        raise InputError(f"dataset not found: {p}")
    try:
        return Dataset.load(p)
    except (ValueError, KeyError, ParseError) as exc:
        raise InputError(f"unreadable dataset {p}: {exc}") from exc


def _load_candidates(path) -> dict:
    """id -> candidate text.  Corrupt lines are skipped with a warning."""
    if not path:
        raise InputError("--candidates is required")
    p = Path(path)
    if not p.exists():
        raise InputError(f"candidates not found: {p}")
    out = {}
    for no, line in enumerate(p.read_text(errors="replace").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            out[str(row["id"])] = str(row.get("candidate") or "")
        except (ValueError, KeyError, TypeError):
            log.warning("%s:%d: unreadable candidate line skipped", p, no)
    return out


def _sample_seed(seed: int, sample_id: str) -> int:
    return int(hashlib.sha256(f"{seed}:{sample_id}".encode()).hexdigest()[:16], 16)


# ------------------------------------------------------------------ extract


def cmd_extract(args) -> int:
    max_lines = args.max_lines
    if not 1 <= max_lines <= MAX_LINES:
        raise InputError(f"--max-lines must be in 1..{MAX_LINES}")
    if not args.inputs and not args.synthetic:
        raise InputError("give input directories or --synthetic N")
    pairs, errors, skips = [], [], []
    for directory in args.inputs:
        if not Path(directory).is_dir():
            raise InputError(f"not a directory: {directory}")
        result = ingest_directory(directory, tag=args.tag or "", jobs=args.jobs)
        pairs.extend(result.pairs)
        errors.extend(result.errors)
        skips.extend(result.skips)
    if args.synthetic:
        pairs.extend(synth_blocks(args.synthetic, args.seed, max_lines))
    pairs = normalize(pairs, max_lines)
    manifest = {"inputs": [str(d) for d in args.inputs], "max_lines": max_lines,
                "skipped": len(skips)}
    if args.synthetic:
        manifest["generator"] = {"count": args.synthetic, "seed": args.seed}
    dataset = Dataset(pairs, manifest)
    if args.sample is not None:
        dataset = sample(dataset, args.sample, args.seed)
    out = Path(args.out or "dataset.jsonl")
    if out.is_dir() or str(args.out).endswith("/"):
        out = out / "dataset.jsonl"
    dataset.save(out)
    for s in skips:
        log.info("skipped %s %s: %s", s.file, s.function, s.reason)
    print(f"wrote {len(dataset)} pairs to {out} ({len(skips)} skipped)")
    if errors:
        lines = [str(e) for e in errors]
        _write(out.with_name(out.stem + ".errors.log"), "\n".join(lines) + "\n")
        for line in lines:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


# ----------------------------------------------------------------- optimize


def _adapter_config(args) -> AdapterConfig:
    try:
        return AdapterConfig(kind=args.adapter, endpoint=args.endpoint or "",
                             model=args.model, cache_dir=args.cache,
                             concurrency=max(1, args.jobs))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def generate_candidates(dataset: Dataset, config: AdapterConfig, shots: int, seed: int,
                        jobs: int = 1, shot_pool: Optional[Dataset] = None) -> list:
    """Rows ``{id, candidate, latency_ms, adapter[, error]}`` in dataset order."""
    pool = shot_pool if shot_pool is not None else dataset
    chosen = select_shots(pool.pairs, shots, seed)
    prompts = [build_prompt(PromptSpec(p.nonopt, chosen)) for p in dataset.pairs]
    responses = query_many(config, prompts, jobs)
    rows = []
    for pair, resp in zip(dataset.pairs, responses):
        if isinstance(resp, AdapterResponse):
            row = {"id": pair.id, "candidate": resp.extracted or "",
                   "latency_ms": resp.latency_ms, "adapter": resp.adapter}
            if resp.extracted is None:
                row["error"] = "ExtractionFailure"
        else:
            name = type(resp).__name__
            detail = resp.key if isinstance(resp, CacheMiss) else str(resp)
            row = {"id": pair.id, "candidate": "", "latency_ms": 0,
                   "adapter": config.kind, "error": f"{name}: {detail}"}
        rows.append(row)
    return rows


def _rows_jsonl(rows: list) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)


def cmd_optimize(args) -> int:
    dataset = _load_dataset(args.dataset)
    config = _adapter_config(args)
    if not 0 <= args.shots <= 8:
        raise InputError("--shots must be in 0..8")
    pool = _load_dataset(args.shot_pool) if args.shot_pool else None
    rows = generate_candidates(dataset, config, args.shots, args.seed, args.jobs, pool)
    out = Path(args.out or "candidates.jsonl")
    _write(out, _rows_jsonl(rows))
    run = RunConfig("optimize", args.dataset, config.to_json(), args.shots, None, args.seed,
                    str(out), args.jobs, {"shot_pool": args.shot_pool})
    _write(out.with_name(out.stem + ".run.json"), _dump(_provenance(run, dataset)))
    misses = [r for r in rows if r.get("error", "").startswith("CacheMiss")]
    failures = [r for r in rows if r.get("error", "").startswith(("RemoteError", "ValueError"))]
    print(f"wrote {len(rows)} candidates to {out}")
    if misses:
        print(f"{len(misses)} cache misses:", file=sys.stderr)
        for r in misses:
            print(f"  {r['id']} {r['error']}", file=sys.stderr)
        return EXIT_INPUT
    if failures:
        for r in failures:
            print(f"  {r['id']} {r['error']}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


# ----------------------------------------------------------------- evaluate


def _score(job):
    pair, candidate, trials, seed = job
    return evaluate_sample(pair, candidate, trials, seed)


def score_dataset(dataset: Dataset, candidates: dict, trials: int, seed: int,
                  jobs: int = 1) -> list:
    jobs_list = [(p, candidates.get(p.id, ""), trials, _sample_seed(seed, p.id))
                 for p in dataset.pairs]
    if jobs <= 1:
        return [_score(j) for j in jobs_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_score, jobs_list, chunksize=16))


def summarize(records: list) -> dict:
    by_source: dict = {}
    for r in records:
        by_source.setdefault(r.source, []).append(r)
    return {"overall": aggregate(records).to_json() if records else None,
            "by_source": {tag: aggregate(rs).to_json() for tag, rs in sorted(by_source.items())}}


def render_summary(summary: dict) -> str:
    head = ("Source", "N", "BLEU", "EMR", "Syntactic", "IO", "Uncheckable")
    rows = [head]
    entries = list(summary["by_source"].items())
    if summary["overall"] is not None:
        entries.append(("all", summary["overall"]))
    for tag, s in entries:
        rows.append((tag, str(s["n"]), f"{s['bleu']:.4f}", f"{s['emr']:.4f}",
                     f"{s['syntactic']:.4f}", f"{s['io']:.4f}", str(s["io_uncheckable"])))
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    return "\n".join("  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                               for i, (c, w) in enumerate(zip(r, widths))).rstrip()
                     for r in rows) + "\n"


def cmd_evaluate(args) -> int:
    dataset = _load_dataset(args.dataset)
    candidates = _load_candidates(args.candidates)
    records = score_dataset(dataset, candidates, args.trials, args.seed, args.jobs)
    out = Path(args.out or "report")
    _write(out / "samples.jsonl", _rows_jsonl([r.to_json() for r in records]))
    run = RunConfig("evaluate", args.dataset, None, None, args.trials, args.seed, str(out),
                    args.jobs, {"candidates": args.candidates})
    summary = summarize(records)
    report = dict(_provenance(run, dataset), **summary)
    _write(out / "summary.json", _dump(report))
    text = render_summary(summary)
    _write(out / "summary.txt", text)
    print(text, end="")
    return EXIT_OK


# ------------------------------------------------------------------- errors


def _is_failing(candidate: str, reference: str, scope: str) -> bool:
    try:
        cand = parse_block(candidate)
    except ParseError:
        return True
    known = block_symbols(parse_block(reference))
    if not validate_block(cand, known).valid:
        return True
    return scope == "mismatch" and print_block(cand) != print_block(parse_block(reference))


def cmd_errors(args) -> int:
    dataset = _load_dataset(args.dataset)
    candidates = _load_candidates(args.candidates)
    evaluated = [p for p in dataset.pairs if p.id in candidates]
    records, rows, failing = [], [], 0
    for pair in evaluated:
        cand = candidates[pair.id]
        if not cand.strip() or not _is_failing(cand, pair.opt, args.scope):
            continue
        failing += 1
        found = classify_errors(cand, pair.opt)
        records.extend(found)
        rows.extend(dict(r.to_json(), id=pair.id) for r in found)
    totals = corpus_stats(evaluated, side="opt")
    stats = per_mnemonic_error_stats(records, totals, args.min_samples)
    top, bottom = top_k(stats), bottom_k(stats)
    out = Path(args.out or "errors")
    run = RunConfig("errors", args.dataset, None, None, None, None, str(out), 1,
                    {"candidates": args.candidates, "min_samples": args.min_samples,
                     "scope": args.scope})
    report = dict(_provenance(run, dataset), failing_samples=failing,
                  categories=category_counts(records),
                  per_mnemonic=[asdict(s) for s in stats],
                  top10=[s.mnemonic for s in top], bottom10=[s.mnemonic for s in bottom])
    _write(out / "errors.jsonl", _rows_jsonl(rows))
    _write(out / "errors.json", _dump(report))
    _write(out / "mnemonic_stats.csv", render_stats_csv(stats))
    cats = "\n".join(f"{k:<16}{v:>6}" for k, v in report["categories"].items())
    text = (f"failing samples: {failing}\n\nError Category  Count\n{cats}\n\n"
            f"Top 10 error probability\n{render_stats_text(top)}\n"
            f"Bottom 10 error probability\n{render_stats_text(bottom)}")
    _write(out / "errors.txt", text)
    print(text, end="")
    return EXIT_OK


# -------------------------------------------------------------- shots sweep


def _parse_range(text: str) -> list:
    try:
        if "-" in text:
            lo, hi = text.split("-", 1)
            ks = list(range(int(lo), int(hi) + 1))
        else:
            ks = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise InputError(f"bad shot range {text!r}") from exc
    if not ks or min(ks) < 0 or max(ks) > 8:
        raise InputError("shot counts must lie in 0..8")
    return ks


def cmd_shots_sweep(args) -> int:
    dataset = _load_dataset(args.dataset)
    config = _adapter_config(args)
    ks = _parse_range(args.k_range)
    n = min(args.samples, len(dataset))
    subset = sample(dataset, n, args.seed)
    pool = _load_dataset(args.shot_pool) if args.shot_pool else dataset
    table, missing = [], 0
    for k in ks:
        rows = generate_candidates(subset, config, k, args.seed, args.jobs, pool)
        missing += sum(1 for r in rows if r.get("error", "").startswith(("CacheMiss", "Remote")))
        cands = {r["id"]: r["candidate"] for r in rows}
        summary = aggregate(score_dataset(subset, cands, args.trials, args.seed, 1))
        table.append({"k": k, "emr": summary.emr, "bleu": summary.bleu,
                      "syntactic": summary.syntactic, "io": summary.io})
    out = Path(args.out or "sweep")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["k", "emr", "bleu", "syntactic", "io"],
                            lineterminator="\n")
    writer.writeheader()
    for row in table:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
    _write(out / "sweep.csv", buf.getvalue())
    run = RunConfig("shots-sweep", args.dataset, config.to_json(), None, args.trials,
                    args.seed, str(out), args.jobs,
                    {"k": ks, "samples": n, "shot_pool": args.shot_pool})
    _write(out / "sweep.json", _dump(dict(_provenance(run, dataset), sweep=table)))
    print(buf.getvalue(), end="")
    if missing:
        print(f"{missing} prompts had no response (cache miss or remote failure)", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


# ------------------------------------------------------------ block tools


def _read_block_arg(value: str) -> str:
    if value == "-":
        return sys.stdin.read()
    p = Path(value)
    if p.exists():
        return p.read_text()
    return value  # inline text, "\n" escapes allowed


def _parse_arg(value: str):
    try:
        return parse_block(_read_block_arg(value))
    except ParseError as exc:
        raise InputError(f"{exc.code}: {exc}") from exc


def cmd_peephole(args) -> int:
    block = _parse_arg(args.block)
    result, trace = optimize(block, rename_result_register=args.rename_result)
    print(print_block(result))
    if args.trace:
        print(_dump(trace.to_json()), end="", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    block = _parse_arg(args.block)
    report = validate_block(block)
    for d in report.diagnostics:
        print(f"line {d.line}: {d.code}: {d.message}")
    if report.valid:
        print("valid")
        return EXIT_OK
    return EXIT_INPUT


def cmd_equiv(args) -> int:
    a, b = _parse_arg(args.a), _parse_arg(args.b)
    verdict = io_equivalent(a, b, args.trials, args.seed)
    print(_dump(verdict.to_json()), end="")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _common(p, *names):
    if "dataset" in names:
        p.add_argument("--dataset", help="dataset JSONL path")
    if "candidates" in names:
        p.add_argument("--candidates", help="candidates JSONL path")
    if "adapter" in names:
        p.add_argument("--adapter", choices=ADAPTERS, default="oracle")
        p.add_argument("--endpoint", help="chat-completions URL for the remote adapter")
        p.add_argument("--model", default="gpt-4o", help="model name sent to the endpoint")
        p.add_argument("--cache", help="response cache directory")
        p.add_argument("--shot-pool", help="dataset the prompt examples are drawn from")
    if "trials" in names:
        p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0 if "trials" not in names else DEFAULT_SEED)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="build a dataset from .s pairs or synthetic blocks")
    p.add_argument("inputs", nargs="*", help="directories of <name>.O0.s / <name>.opt.s files")
    p.add_argument("--synthetic", type=int, metavar="N", help="add N synthetic pairs")
    p.add_argument("--max-lines", type=int, default=MAX_LINES)
    p.add_argument("--sample", type=int, metavar="N", help="keep a seeded sample of N pairs")
    p.add_argument("--tag", help="source tag for ingested pairs (default: directory name)")
    _common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("optimize", help="produce candidates with an adapter")
    _common(p, "dataset", "adapter")
    p.add_argument("--shots", type=int, default=3)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="score candidates against references")
    _common(p, "dataset", "candidates", "trials")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("errors", help="classify errors of failing candidates")
    _common(p, "dataset", "candidates")
    p.add_argument("--min-samples", type=int, default=50)
    p.add_argument("--scope", choices=("invalid", "mismatch"), default="invalid",
                   help="failing = fails validation (default) or differs from the reference")
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("shots-sweep", help="EMR and BLEU as a function of prompt shots")
    _common(p, "dataset", "adapter", "trials")
    p.add_argument("--k-range", default="0-5")
    p.add_argument("--samples", type=int, default=20)
    p.set_defaults(func=cmd_shots_sweep)

    p = sub.add_parser("peephole", help="run the reference optimizer on one block")
    p.add_argument("block", help="file, '-' for stdin, or inline text")
    p.add_argument("--trace", action="store_true", help="print the rewrite trace to stderr")
    p.add_argument("--rename-result", action="store_true",
                   help="rename the scratch result register to x0/w0 first")
    p.set_defaults(func=cmd_peephole)

    p = sub.add_parser("validate", help="validate one block")
    p.add_argument("block")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("equiv", help="randomized equivalence check of two blocks")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_equiv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, NotEnoughSamples, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RemoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort exit code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
