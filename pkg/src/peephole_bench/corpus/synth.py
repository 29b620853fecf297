"""Templated generator of small unoptimized-looking AArch64 blocks."""
from __future__ import annotations

import random

from ..asm.isa import validate_block
from ..asm.parser import parse_block

SCRATCH = (8, 9, 10, 11, 12)
ARGS = (0, 1, 2, 3)
_BITMASKS = (0xFF, 0xF0, 0x1, 0xFFFF, 0x7, 0xFF00, 0x3C)
_COND = ("eq", "ne", "lt", "ge", "hi", "ls", "gt", "le", "cs", "cc", "mi", "pl")


def _r(idx: int, width: int) -> str:
    return f"{'w' if width == 32 else 'x'}{idx}"


class _Gen:
    def __init__(self, rng: random.Random, width: int):
        self.rng = rng
        self.w = width

    def reg(self, pool=SCRATCH + ARGS) -> str:
        return _r(self.rng.choice(pool), self.w)

    def imm(self) -> int:
        return self.rng.choice((0, 1, 2, 3, 4, 5, 7, 8, 16, 31, 64, 100, 255, 4095))

    def shift(self) -> int:
        return self.rng.choice((0, 1, 2, 3, 4, self.w // 2, self.w - 1))

    def alu(self) -> list:
        rng, R = self.rng, self.reg
        kind = rng.randrange(17)
        d, a, b = R(), R(), R()
        if kind == 0:
            return [f"mov {d}, #{self.imm()}"]
        if kind == 1:
            return [f"mov {d}, {a}"]
        if kind == 2:
            return [f"{rng.choice(('add', 'sub'))} {d}, {a}, #{self.imm()}"]
        if kind == 3:
            return [f"{rng.choice(('add', 'sub', 'and', 'orr', 'eor'))} {d}, {a}, {b}"]
        if kind == 4:
            return [f"{rng.choice(('and', 'orr', 'eor'))} {d}, {a}, #{rng.choice(_BITMASKS)}"]
        if kind == 5:
            return [f"mul {d}, {a}, {b}"]
        if kind == 6:
            return [f"mul {d}, {a}, #{rng.choice((0, 1, 2, 4, 8, 16))}"]
        if kind == 7:
            return [f"{rng.choice(('lsl', 'lsr', 'asr'))} {d}, {a}, #{self.shift()}"]
        if kind == 8:
            return [f"{rng.choice(('udiv', 'sdiv'))} {d}, {a}, {b}"]
        if kind == 9:
            return [f"{rng.choice(('neg', 'mvn'))} {d}, {a}"]
        if kind == 10:
            return [f"cmp {a}, {b}", f"cset {d}, {rng.choice(_COND)}"]
        if kind == 11:
            return [f"{rng.choice(('adds', 'subs'))} {d}, {a}, {b}",
                    f"csel {R()}, {a}, {b}, {rng.choice(_COND)}"]
        if kind == 12:
            return [f"madd {d}, {a}, {b}, {R()}"]
        if kind == 13:
            return [f"{rng.choice(('add', 'sub'))} {d}, {a}, {b}, lsl #{rng.randrange(4)}"]
        if kind == 14:
            return [f"mov {a}, #{rng.choice((1, 2, 4, 8, 0))}", f"mul {d}, {b}, {a}"]
        if kind == 15:
            return [f"mov {d}, {d}"] if self.w == 64 else [f"lsr {d}, {d}, #0"]
        return [f"{rng.choice(('lsl', 'lsr', 'asr'))} {d}, {a}, {b}"]


def _finish(rng: random.Random, lines: list, gen: _Gen) -> list:
    r = rng.random()
    if r < 0.6:
        if rng.random() < 0.5:
            lines.append(f"mov {_r(0, gen.w)}, {gen.reg(SCRATCH)}")
        lines.append("ret")
    elif r < 0.75:
        lines.append(f"cbz {gen.reg()}, .LBB0_{rng.randrange(2, 9)}")
    elif r < 0.85:
        lines.append(f"cmp {gen.reg()}, #{rng.randrange(16)}")
        lines.append(f"b.{rng.choice(_COND)} .LBB0_{rng.randrange(2, 9)}")
    elif r < 0.92:
        lines.append(f"b .LBB0_{rng.randrange(2, 9)}")
    return lines


def alu_chain(rng: random.Random, max_len: int) -> list:
    gen = _Gen(rng, rng.choice((32, 64)))
    lines: list = []
    target = rng.randint(1, max(1, max_len - 2))
    while len(lines) < target:
        lines.extend(gen.alu())
    return _finish(rng, lines[:max_len - 2], gen)


def const_chain(rng: random.Random, max_len: int) -> list:
    gen = _Gen(rng, rng.choice((32, 64)))
    d = gen.reg(SCRATCH + (0,))
    lines = [f"mov {d}, #{rng.randrange(1, 200)}"]
    for _ in range(rng.randint(1, max(1, min(5, max_len - 3)))):
        op = rng.choice(("add", "sub", "orr", "eor", "lsl", "and"))
        if op in ("lsl",):
            lines.append(f"lsl {d}, {d}, #{rng.randrange(1, 5)}")
        elif op in ("orr", "eor", "and"):
            lines.append(f"{op} {d}, {d}, #{rng.choice(_BITMASKS)}")
        else:
            lines.append(f"{op} {d}, {d}, #{rng.randrange(0, 50)}")
    if d[1:] != "0":
        lines.append(f"mov {_r(0, gen.w)}, {d}")
    lines.append("ret")
    return lines[:max_len]


def spill_frame(rng: random.Random, max_len: int) -> list:
    """The -O0 shape: spill arguments, reload, compute, spill result, reload into w0."""
    w = rng.choice((32, 64))
    gen = _Gen(rng, w)
    size = w // 8
    frame = 16 if rng.random() < 0.7 else 32
    slots = list(range(frame - size, -1, -size))
    rng.shuffle(slots)
    nargs = rng.randint(1, 2)
    lines = [f"sub sp, sp, #{frame}", f".cfi_def_cfa_offset {frame}"]
    arg_slots = slots[:nargs]
    for i, off in enumerate(arg_slots):
        lines.append(f"str {_r(i, w)}, [sp, #{off}]")
    t = [8, 9][:nargs]
    for reg, off in zip(t, arg_slots):
        lines.append(f"ldr {_r(reg, w)}, [sp, #{off}]")
    body_budget = max(0, max_len - (2 * nargs + 5))
    for _ in range(rng.randint(0, min(3, body_budget))):
        kind = rng.randrange(6)
        a = _r(8, w)
        b = _r(t[-1], w)
        if kind == 0:
            lines.append(f"add {a}, {a}, #{gen.imm()}")
        elif kind == 1:
            lines.append(f"mul {a}, {a}, {b}")
        elif kind == 2:
            lines.append(f"lsl {a}, {a}, #{rng.randrange(0, 4)}")
        elif kind == 3:
            lines.append(f"mov {_r(9, w)}, #{rng.choice((0, 1, 2, 4))}")
            lines.append(f"mul {a}, {a}, {_r(9, w)}")
        elif kind == 4:
            lines.append(f"sub {a}, {a}, {b}")
        else:
            lines.append(f"eor {a}, {a}, {b}")
    res = slots[nargs] if len(slots) > nargs else arg_slots[0]
    lines.append(f"str {_r(8, w)}, [sp, #{res}]")
    lines.append(f"ldr {_r(0, w)}, [sp, #{res}]")
    lines.append(f"add sp, sp, #{frame}")
    lines.append("ret")
    return lines


def memory_block(rng: random.Random, max_len: int) -> list:
    w = rng.choice((32, 64))
    gen = _Gen(rng, w)
    size = w // 8
    lines: list = []
    forms = rng.randrange(4)
    if forms == 0:
        lines += ["lsl x8, x1, #32", "asr x9, x8, #32", f"mov {_r(10, w)}, #{gen.imm()}",
                  f"str {_r(10, w)}, [x0, x9, lsl #{size.bit_length() - 1}]"]
    elif forms == 1:
        lines += ["sxtw x9, w1", f"ldr {_r(8, w)}, [x0, x9, lsl #{size.bit_length() - 1}]",
                  f"add {_r(8, w)}, {_r(8, w)}, #1", f"str {_r(8, w)}, [x0, #{size * rng.randrange(4)}]"]
    elif forms == 2:
        lines += [f"ldr {_r(8, w)}, [x1, #{size * rng.randrange(4)}]",
                  f"mov {_r(9, w)}, {_r(8, w)}",
                  f"str {_r(9, w)}, [x0]"]
    else:
        lines += [f"ldrb w8, [x0, #{rng.randrange(8)}]", "lsl w9, w8, #1",
                  "strb w9, [x0, #1]", "ldrsw x10, [x1]", "str x10, [x0, #8]"]
    while len(lines) < max_len - 2 and rng.random() < 0.3:
        lines.extend(gen.alu())
    return _finish(rng, lines[:max_len - 2], gen)


TEMPLATES = (alu_chain, const_chain, spill_frame, memory_block)
_WEIGHTS = (0.35, 0.2, 0.3, 0.15)


def random_block_text(rng: random.Random, max_len: int = 15) -> str:
    """One valid block of at most ``max_len`` instruction lines."""
    while True:
        template = rng.choices(TEMPLATES, _WEIGHTS)[0]
        lines = template(rng, max_len)
        text = "\n".join(lines)
        block = parse_block(text)
        if 0 < len(block) <= max_len and validate_block(block).valid:
            return text
