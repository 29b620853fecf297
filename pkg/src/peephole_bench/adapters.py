"""Candidate optimizers behind one interface: remote chat endpoint, replay cache, oracle.

Prompts are k-shot: a fixed preamble, then solved Input/Output examples, then
the target block.  Every remote response is written to a content-addressed
cache so reruns and re-scoring never repeat a paid call.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

import httpx

from .asm.isa import is_known_mnemonic
from .asm.model import Directive, Instruction, Label, ParseError
from .asm.parser import parse_block, parse_line
from .asm.printer import print_block
from .peephole import optimize

PREAMBLE_VERSION = "prompt-v1"
PREAMBLE = (
    "You are an AArch64 peephole optimizer. Each Input is a basic block of "
    "unoptimized AArch64 assembly. Reply with the equivalent optimized basic "
    "block only, one instruction per line, without explanation.\n"
)
MAX_SHOTS = 8
API_KEY_ENV = "PEEPHOLE_API_KEY"
ADAPTERS = ("oracle", "replay", "remote")


class RemoteError(RuntimeError):
    def __init__(self, status: Optional[int], message: str = ""):
        super().__init__(f"remote call failed (status {status}): {message}")
        self.status = status


class CacheMiss(KeyError):
    def __init__(self, key: str):
        super().__init__(key)
        self.key = key


class ExtractionFailure(ValueError):
    pass


# ----------------------------------------------------------------- prompts


@dataclass(frozen=True)
class PromptSpec:
    target: str
    shots: tuple = ()
    instruction_preamble: str = PREAMBLE

    def __post_init__(self):
        if len(self.shots) > MAX_SHOTS:
            raise ValueError(f"at most {MAX_SHOTS} shots")


def _section(nonopt: str, opt: Optional[str]) -> str:
    out = f"Input:\n{nonopt.strip(chr(10))}\nOutput:\n"
    if opt is not None:
        out += f"{opt.strip(chr(10))}\n"
    return out


def build_prompt(spec: PromptSpec) -> str:
    parts = [spec.instruction_preamble]
    parts.extend(_section(nonopt, opt) for nonopt, opt in spec.shots)
    parts.append(_section(spec.target, None))
    return "".join(parts)


def prompt_target(prompt: str) -> str:
    """Recover the target block from a prompt built by :func:`build_prompt`."""
    start = prompt.rfind("Input:\n")
    if start < 0 or not prompt.endswith("Output:\n"):
        raise ValueError("not a k-shot prompt")
    return prompt[start + len("Input:\n"): -len("\nOutput:\n")]


def select_shots(pool: Iterable, k: int, seed) -> tuple:
    """``k`` (nonopt, opt) shots chosen by seeded hash rank.

    The order depends only on the seed and sample ids, so the shot set for k
    is a prefix of the set for k + 1.
    """
    ranked = sorted(pool, key=lambda p: hashlib.sha256(f"shot:{seed}:{p.id}".encode()).hexdigest())
    return tuple((p.nonopt, p.opt) for p in ranked[:k])


# ----------------------------------------------------------- extraction

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_PROSE_LABELS = frozenset({"input", "output", "answer", "solution", "code", "result",
                           "optimized", "assembly", "note", "explanation"})


def _asm_line(line: str) -> bool:
    try:
        item = parse_line(line)
    except ParseError:
        return False
    if isinstance(item, Label):
        name = item.name
        return name.lower() not in _PROSE_LABELS and not re.match(r"^[A-Z][a-z]", name)
    if isinstance(item, Directive):
        return True
    if isinstance(item, Instruction):
        if is_known_mnemonic(item.mnemonic):
            return True
        # unknown mnemonics (model typos) still count when shaped like code
        return item.mnemonic.islower() and len(item.mnemonic) <= 8 and bool(item.operands)
    return False


def extract_code(response_text: str) -> str:
    """First fenced region, else the longest run of assembly lines."""
    fenced = _FENCE.search(response_text)
    if fenced:
        body = "\n".join(line.strip() for line in fenced.group(1).strip("\n").split("\n"))
        if body.strip():
            return body.strip("\n")
    best: list = []
    run: list = []
    for raw in response_text.split("\n"):
        line = raw.strip()
        if not line:
            continue
        if _asm_line(line):
            run.append(line)
            if len(run) > len(best):
                best = list(run)
        else:
            run = []
    if not best:
        raise ExtractionFailure("no assembly found in response")
    return "\n".join(best)


# ------------------------------------------------------------------ cache


def cache_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode()).hexdigest()


def cache_file(cache_dir, prompt: str) -> Path:
    return Path(cache_dir) / f"{cache_key(prompt)}.json"


def read_cache(cache_dir, prompt: str) -> dict:
    path = cache_file(cache_dir, prompt)
    if not path.exists():
        raise CacheMiss(cache_key(prompt))
    return json.loads(path.read_text())


def write_cache(cache_dir, prompt: str, text: str, latency_ms: int,
                timestamp: Optional[str] = None) -> Path:
    """Atomic write-temp-then-rename of one cache entry."""
    path = cache_file(cache_dir, prompt)
    path.parent.mkdir(parents=True, exist_ok=True)
    entry = {"prompt": prompt, "text": text, "latency_ms": int(latency_ms),
             "timestamp": timestamp or datetime.now(timezone.utc).isoformat()}
    tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
    tmp.write_text(json.dumps(entry, sort_keys=True))
    os.replace(tmp, path)
    return path


def prime_cache(cache_dir, entries: Iterable) -> int:
    """Store ``(prompt, text, latency_ms)`` triples; returns the count."""
    n = 0
    for prompt, text, latency_ms in entries:
        write_cache(cache_dir, prompt, text, latency_ms, timestamp="primed")
        n += 1
    return n


# ---------------------------------------------------------- rate limiting


class TokenBucket:
    """Thread-safe token bucket; ``rate`` tokens per second up to ``capacity``."""

    def __init__(self, rate: float, capacity: float,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = rate
        self.capacity = capacity
        self.tokens = capacity
        self.clock = clock
        self.sleep = sleep
        self.stamp = clock()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.stamp) * self.rate)
                self.stamp = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            self.sleep(wait)


# ----------------------------------------------------------------- query


@dataclass
class AdapterConfig:
    kind: str = "oracle"
    endpoint: str = ""
    model: str = "gpt-4o"
    cache_dir: Optional[str] = None
    api_key_env: str = API_KEY_ENV
    attempts: int = 3
    backoff_s: float = 1.0
    timeout_s: float = 60.0
    rate_per_s: float = 1.0
    burst: int = 4
    concurrency: int = 4
    bucket: Optional[TokenBucket] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ADAPTERS:
            raise ValueError(f"unknown adapter {self.kind!r}")
        if self.kind == "replay" and not self.cache_dir:
            raise ValueError("replay adapter needs a cache directory")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote adapter needs an endpoint")

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "remote":
            out.update(endpoint=self.endpoint, model=self.model, attempts=self.attempts,
                       rate_per_s=self.rate_per_s, concurrency=self.concurrency)
        if self.kind in ("remote", "replay"):
            out["cache_dir"] = self.cache_dir
        return out


@dataclass(frozen=True)
class AdapterResponse:
    text: str
    extracted: Optional[str]  # None when extraction failed
    latency_ms: int
    adapter: str


def _respond(text: str, latency_ms: int, adapter: str) -> AdapterResponse:
    try:
        extracted = extract_code(text)
    except ExtractionFailure:
        extracted = None
    return AdapterResponse(text, extracted, int(latency_ms), adapter)


def _oracle(prompt: str) -> AdapterResponse:
    target = parse_block(prompt_target(prompt))
    text = print_block(optimize(target)[0])
    # the engine is pure, so the reported latency is fixed for reproducibility
    return AdapterResponse(text, text, 0, "oracle")


def _remote_call(config: AdapterConfig, prompt: str, client: httpx.Client,
                 sleep: Callable[[float], None]) -> tuple:
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(config.api_key_env)
    if key:
        headers["Authorization"] = f"Bearer {key}"
    body = {"model": config.model, "temperature": 0,
            "messages": [{"role": "user", "content": prompt}]}
    status, message = None, ""
    for attempt in range(config.attempts):
        if attempt:
            sleep(config.backoff_s * 2 ** (attempt - 1))
        if config.bucket is not None:
            config.bucket.acquire()
        start = time.perf_counter()
        try:
            resp = client.post(config.endpoint, json=body, headers=headers,
                               timeout=config.timeout_s)
        except httpx.HTTPError as exc:
            status, message = None, str(exc)
            continue
        latency = int((time.perf_counter() - start) * 1000)
        if resp.status_code == 429 or resp.status_code >= 500:
            status, message = resp.status_code, resp.text[:200]
            continue
        if resp.status_code >= 400:
            raise RemoteError(resp.status_code, resp.text[:200])
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise RemoteError(resp.status_code, f"malformed reply: {exc}") from exc
        return text, latency
    raise RemoteError(status, f"{config.attempts} attempts exhausted: {message}")


def query(config: AdapterConfig, prompt: str, client: Optional[httpx.Client] = None,
          sleep: Callable[[float], None] = time.sleep) -> AdapterResponse:
    if config.kind == "oracle":
        return _oracle(prompt)
    if config.kind == "replay":
        entry = read_cache(config.cache_dir, prompt)
        return _respond(entry["text"], entry["latency_ms"], "replay")
    if config.cache_dir:
        try:
            entry = read_cache(config.cache_dir, prompt)
            return _respond(entry["text"], entry["latency_ms"], "remote")
        except CacheMiss:
            pass
    own = client is None
    client = client or httpx.Client()
    try:
        text, latency = _remote_call(config, prompt, client, sleep)
    finally:
        if own:
            client.close()
    if config.cache_dir:
        write_cache(config.cache_dir, prompt, text, latency)
    return _respond(text, latency, "remote")


def query_many(config: AdapterConfig, prompts: list, jobs: int = 1,
               client: Optional[httpx.Client] = None) -> list:
    """Query in order; remote calls share one bounded pool and token bucket.

    Each slot holds an AdapterResponse or the exception raised for it.
    """
    if config.kind == "remote" and config.bucket is None:
        config.bucket = TokenBucket(config.rate_per_s, config.burst)
    workers = config.concurrency if config.kind == "remote" else max(1, jobs)

    def one(prompt):
        try:
            return query(config, prompt, client)
        except (RemoteError, CacheMiss, ValueError) as exc:
            return exc

    if workers <= 1:
        return [one(p) for p in prompts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, prompts))
