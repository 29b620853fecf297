import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from golden_blocks import DEFAULT_MODE_OUTPUT, LLVM, OPTIMIZATION_ROWS, ORIGINAL, ROWS
from peephole_bench.asm import canonicalize, parse_block, print_block, validate_block
from peephole_bench.asm.model import TERMINATORS
from peephole_bench.corpus.synth import random_block_text
from peephole_bench.interp import io_equivalent
from peephole_bench.peephole import (
    CATEGORIES,
    ITERATION_CAP,
    RULES,
    IterationCapExceeded,
    apply_rules_once,
    optimize,
    rename_result,
)


def opt(text: str, **kw) -> str:
    return print_block(optimize(parse_block(text), **kw)[0])


def rules_fired(text: str) -> list:
    return [e.rule for e in optimize(parse_block(text))[1].applied]


def test_rule_priority_order():
    order = [r.category for r in RULES]
    ranks = [CATEGORIES.index(c) for c in order]
    assert ranks == sorted(ranks)
    assert CATEGORIES == ("ConstantFolding", "AlgebraicLaws", "StrengthReduction",
                          "NullSequences", "CombineOperations", "AddressModeOperations")


# ------------------------------------------------------------ apply once

def test_apply_once_folds():
    block, changed, steps = apply_rules_once(parse_block(ROWS["ConstantFolding"][0]))
    assert changed and print_block(block) == "mov w0, #5\nret"
    assert steps[0].rule == "fold-constant"


def test_apply_once_fixpoint_input():
    block, changed, steps = apply_rules_once(parse_block("mov w0, #5\nret"))
    assert not changed and steps == [] and print_block(block) == "mov w0, #5\nret"


def test_apply_once_shift_by_zero():
    block, changed, _ = apply_rules_once(parse_block("lsl w8, w8, #1\nlsr w8, w8, #0\nret"))
    assert changed and print_block(block) == "lsl w8, w8, #1\nret"


# ---------------------------------------------------------- optimization table

@pytest.mark.parametrize("category,src,_published", OPTIMIZATION_ROWS)
def test_default_mode_outputs(category, src, _published):
    assert opt(src) == DEFAULT_MODE_OUTPUT[category]


@pytest.mark.parametrize("category,src,published", [
    r for r in OPTIMIZATION_ROWS if r[0] != "CombineOperations"])
def test_published_outputs_with_result_renaming(category, src, published):
    assert opt(src, rename_result_register=True) == canonicalize(published)


def test_combine_row_value_correct_rewrite():
    src, published = ROWS["CombineOperations"]
    # without ret every register is live, so nothing may be dropped
    assert opt(src) == canonicalize(src)
    assert opt(src + "\nret") == "lsl x3, x1, #2\nret"
    assert opt(src + "\nret") != canonicalize(published)


def test_store_through_frame_sample():
    assert opt(ORIGINAL) == "mov w8, #5\nstr w8, [x0, w1, sxtw #2]\nret"
    assert opt(LLVM) == "mov w8, #5\nstr w8, [x0, w1, sxtw #2]\nret"


# ------------------------------------------------------------ rule inventory

@pytest.mark.parametrize("src,expected,first_rule", [
    ("mov w8, #7\nadd w0, w8, #3\nret", "mov w0, #10\nret", "fold-constant"),
    ("mov w1, #6\nmov w2, #7\nmul w0, w1, w2\nret", "mov w0, #42\nret", "fold-constant"),
    ("mov w8, #3\nadd w0, w1, w8\nret", "add w0, w1, #3\nret", "propagate-constant"),
    ("mul w0, w1, #1\nret", "mov w0, w1\nret", "algebraic-identity"),
    ("add x0, x1, #0\nret", "mov x0, x1\nret", "algebraic-identity"),
    ("orr w0, w1, wzr\nret", "mov w0, w1\nret", "algebraic-identity"),
    ("mul x0, x1, xzr\nret", "mov x0, xzr\nret", "algebraic-identity"),
    ("eor x0, x0, xzr\nret", "ret", "algebraic-identity"),
    ("mul w0, w1, #8\nret", "lsl w0, w1, #3\nret", "strength-reduce"),
    ("mul x0, x1, #16\nret", "lsl x0, x1, #4\nret", "strength-reduce"),
    ("mov x0, x0\nret", "ret", "self-move"),
    ("nop\nmov w0, #1\nret", "mov w0, #1\nret", "remove-nop"),
    ("mov w8, #3\nmov w0, #1\nret", "mov w0, #1\nret", "dead-instruction"),
    ("sub sp, sp, #16\nstr w1, [sp, #12]\nmov w0, #2\nadd sp, sp, #16\nret",
     "mov w0, #2\nret", "dead-frame-store"),
    ("mov x8, x1\nadd x0, x8, #1\nret", "add x0, x1, #1\nret", "copy-propagate"),
    ("add w8, w1, w2\nmov w0, w8\nret", "add w0, w1, w2\nret", "coalesce-move"),
    ("lsl x0, x1, #2\nlsl x0, x0, #3\nret", "lsl x0, x1, #5\nret", "merge-shifts"),
    ("lsl x2, x1, #1\nadd x3, x2, x2\nret", "lsl x3, x1, #2\nret", "add-self-shift"),
    ("lsl x8, x1, #32\nasr x9, x8, #32\nmov x0, x9\nret", "sxtw x0, w1\nret",
     "shift-pair-extend"),
    ("sxtw x9, w1\nldr w0, [x0, x9, lsl #2]\nret", "ldr w0, [x0, w1, sxtw #2]\nret",
     "fold-index-extend"),
])
def test_rule_inventory(src, expected, first_rule):
    assert opt(src) == expected
    assert rules_fired(src)[0] == first_rule
    assert io_equivalent(parse_block(src), parse_block(expected), 200).equivalent


def test_stack_forwarding_and_frame_removal():
    src = ROWS["AddressModeOperations"][0]
    fired = rules_fired(src)
    assert "forward-store-load" in fired and "remove-frame" in fired
    assert ".cfi_def_cfa_offset" not in opt(src)


@pytest.mark.parametrize("src", [
    "lsr w0, w0, #0\nret",          # clears the upper half of x0
    "mov w0, w0\nret",              # likewise
    "mov w0, #5\nret",
    "str w1, [x0]\nldr w2, [x0]\nadd w0, w2, #1\nret",  # non-frame memory left alone
    "adds w0, w1, w2\ncset w3, eq\nret",
])
def test_sound_non_rewrites(src):
    assert opt(src) == canonicalize(src)


def test_flags_preserved_when_read():
    src = "mov w8, #1\nadds w9, w8, #2\nb.eq .L1"
    out = parse_block(opt(src))
    assert io_equivalent(parse_block(src), out, 200).equivalent
    assert any(i.mnemonic in ("adds", "cmp", "subs", "cmn") for i in out.instructions)


def test_everything_live_without_ret():
    src = "mov w8, #3\nmov w9, #4"
    assert opt(src) == canonicalize(src)


# ----------------------------------------------------------- trace and cap

def test_trace_json():
    _, trace = optimize(parse_block(ROWS["ConstantFolding"][0]))
    doc = json.loads(json.dumps(trace.to_json()))
    assert doc["iterations"] == 2
    assert doc["applied"] == [
        {"rule": "fold-constant", "category": "ConstantFolding",
         "before": ["add w0, w0, #3"], "after": ["mov w0, #5"]},
        {"rule": "dead-instruction", "category": "NullSequences",
         "before": ["mov w0, #2"], "after": []},
    ]
    assert trace.iterations <= ITERATION_CAP == 32


def test_cap_is_diagnostic_only():
    block = parse_block(ROWS["AddressModeOperations"][0])
    out, trace = optimize(block, cap=1)
    assert trace.cap_exceeded and trace.to_json()["diagnostic"] == "IterationCapExceeded"
    assert validate_block(out).valid
    with pytest.raises(IterationCapExceeded) as info:
        optimize(block, cap=1, strict=True)
    assert info.value.block == out


def test_rename_result():
    assert print_block(rename_result(parse_block("lsl w8, w8, #1\nret"))) == "lsl w0, w0, #1\nret"
    # blocks that already use register 0 are left alone
    same = parse_block("add w8, w0, #1\nret")
    assert rename_result(same) == same
    # callee-saved destinations are not renamed
    keep = parse_block("add w19, w1, #1\nret")
    assert rename_result(keep) == keep


# --------------------------------------------------------------- properties

def _block(seed: int):
    return parse_block(random_block_text(random.Random(seed)))


def _slots(block) -> set:
    return {r.slot for i in block.instructions for r in i.regs() if r.slot is not None}


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 40))
def test_optimize_preserves_semantics(seed):
    block = _block(seed)
    out, trace = optimize(block)
    verdict = io_equivalent(block, out, trials=50)
    assert verdict.equivalent, (print_block(block), print_block(out), verdict.detail)


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 40))
def test_optimize_idempotent_monotone_valid(seed):
    block = _block(seed)
    out, trace = optimize(block)
    assert not trace.cap_exceeded
    assert len(out) <= len(block)
    assert optimize(out)[0] == out
    assert validate_block(out).valid
    assert _slots(out) <= _slots(block)
    body = out.instructions[:-1]
    assert not any(i.mnemonic in TERMINATORS for i in body)
    if out.instructions and out.instructions[-1].mnemonic in TERMINATORS:
        # operands may be copy-propagated; the kind of transfer may not change
        assert block.instructions[-1].mnemonic == out.instructions[-1].mnemonic
        assert getattr(block.terminator, "target", None) == getattr(out.terminator, "target", None)


def test_generated_blocks_mostly_shrink():
    rng = random.Random(2024)
    blocks = [parse_block(random_block_text(rng)) for _ in range(300)]
    shrunk = sum(len(optimize(b)[0]) < len(b) for b in blocks)
    assert shrunk / len(blocks) >= 0.6
