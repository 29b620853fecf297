import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from golden_blocks import ERROR_ROWS, GPT4O, GPT_O1, LLAMA2, LLVM, OPTIMIZATION_ROWS, ORIGINAL
from peephole_bench.asm import (
    AddrMode,
    BasicBlock,
    Directive,
    ExtendedReg,
    Imm,
    Instruction,
    Label,
    LabelRef,
    Mem,
    MemIndex,
    ParseError,
    Reg,
    Register,
    RegKind,
    Ret,
    ShiftedReg,
    block_symbols,
    canonicalize,
    gpr,
    parse_block,
    parse_register,
    print_block,
    validate_block,
)
from peephole_bench.corpus.synth import random_block_text


# ---------------------------------------------------------------- registers

@pytest.mark.parametrize("name", ["w0", "w30", "x0", "x30", "sp", "wzr", "xzr"])
def test_register_text_round_trip(name):
    assert parse_register(name).name == name


@pytest.mark.parametrize("name", ["w31", "x31", "x99", "r0", "wsp1"])
def test_out_of_range_registers_rejected(name):
    assert parse_register(name) is None


def test_register_index_invariants():
    with pytest.raises(ValueError):
        Register(RegKind.GPR64, 31)
    with pytest.raises(ValueError):
        Register(RegKind.SP, 0)
    assert gpr("w8").slot == gpr("x8").slot == 8
    assert gpr("wzr").slot is None


# ------------------------------------------------------------------ parsing

def test_two_instruction_block_with_ret():
    block = parse_block("mov w0, #5\nret")
    assert len(block) == 2
    assert isinstance(block.terminator, Ret)


def test_indexed_memory_operand():
    instr = parse_block("str w8, [x9, x10, lsl #2]").instructions[0]
    mem = instr.operands[1]
    assert mem == Mem(gpr("x9"), MemIndex(gpr("x10"), "lsl", 2), None, AddrMode.OFFSET)
    assert mem.displacement == 0


def test_extended_index_memory_operand():
    mem = parse_block("str w8, [x0, w1, sxtw #2]").instructions[0].operands[1]
    assert mem.index == MemIndex(gpr("w1"), "sxtw", 2)


def test_pre_and_post_index():
    pre = parse_block("stp x29, x30, [sp, #-16]!").instructions[0].operands[2]
    post = parse_block("ldr x0, [sp], #16").instructions[0].operands[1]
    assert pre.mode is AddrMode.PRE_INDEX and pre.displacement == -16
    assert post.mode is AddrMode.POST_INDEX and post.displacement == 16


def test_empty_input_is_an_error():
    with pytest.raises(ParseError) as info:
        parse_block("")
    assert info.value.code == "EmptyInput"


@pytest.mark.parametrize("text", ["mov w0,, w1", "ldr x0, [x1", "@@@", "mov w0 #1",
                                  "mov w0, #5 is enough"])
def test_unlexable_lines(text):
    with pytest.raises(ParseError) as info:
        parse_block("ret\n" + text)
    assert info.value.line == 2


def test_escaped_newlines_are_separators():
    assert parse_block("mov w0, #5\\nret") == parse_block("mov w0, #5\nret")


def test_comments_stripped_but_kept_in_raw():
    instr = parse_block("mov w8, #5 // five").instructions[0]
    assert instr.operands == (Reg(gpr("w8")), Imm("5"))
    assert "five" in instr.raw


def test_directives_and_labels_preserved():
    block = parse_block(".LBB0_1:\n.cfi_def_cfa_offset 16\nret")
    assert block.items[0] == Label(".LBB0_1")
    assert block.items[1] == Directive(".cfi_def_cfa_offset 16")
    assert print_block(block) == ".LBB0_1:\n.cfi_def_cfa_offset 16\nret"


def test_unknown_mnemonic_is_representable():
    instr = parse_block("movsl x8, x0, #2").instructions[0]
    assert instr.mnemonic == "movsl"


def test_label_modifier():
    op = parse_block("add x0, x0, :lo12:.L.str").instructions[0].operands[2]
    assert op == LabelRef(".L.str", "lo12")


def test_operand_variants():
    ops = parse_block("add x0, x1, w2, sxtw #2\nadd x3, x4, x5, lsl #3").instructions
    assert ops[0].operands[2] == ExtendedReg(gpr("w2"), "sxtw", 2)
    assert ops[1].operands[2] == ShiftedReg(gpr("x5"), "lsl", 3)


@pytest.mark.parametrize("text", [
    "mov w0, #2\nret\nmov w1, #3",
    "cbz w0, .L1\nadd w0, w0, #1",
])
def test_internal_control_transfer_is_not_straight_line(text):
    assert not parse_block(text).is_straight_line


# ----------------------------------------------------------------- printing

def test_canonical_spacing():
    assert canonicalize("mov   w0,#5") == "mov w0, #5"
    assert canonicalize("  MOV  W0 , #0X1F ") == "mov w0, #0x1f"


def test_hex_literal_preserved():
    assert canonicalize("and w8, w0, #0xff") == "and w8, w0, #0xff"


def test_gpt_o1_block_prints_canonically():
    assert canonicalize(GPT_O1) == "mov w8, #5\nstr w8, [x0, w1, sxtw #2]\nret"


@pytest.mark.parametrize("text", [
    "ldr x0, [sp, #16]!", "ldr x0, [sp], #16", "adrp x0, :got:sym", "b.eq .LBB0_2",
    "cset w0, ne", "movk w8, #1, lsl #16", "fmov d0, #1.5", "tbnz w0, #3, .LBB0_3",
    "add w0, w1, #1, lsl #12", "stp x29, x30, [sp, #-16]!", "mov x29, sp", "bl printf",
])
def test_canonical_forms_are_fixed_points(text):
    assert canonicalize(text) == text


# --------------------------------------------------------------- validation

def test_all_table_texts_parse():
    texts = [ORIGINAL, LLVM, GPT4O, LLAMA2, GPT_O1]
    texts += [t for row in OPTIMIZATION_ROWS for t in row[1:]]
    texts += [t for row in ERROR_ROWS for t in row[1:]]
    for text in texts:
        parse_block(text)


def test_valid_blocks():
    for text in [ORIGINAL, LLVM, GPT_O1, "mov w0, #5\nret"]:
        assert validate_block(parse_block(text)).valid


def test_llama2_block_diagnostics():
    report = validate_block(parse_block(LLAMA2))
    assert not report.valid
    assert [(d.line, d.code, d.token) for d in report.diagnostics] == [
        (1, "UnknownMnemonic", "movsl"),
        (2, "UnknownMnemonic", "movr"),
        (3, "BadOperandKind", "#5"),
    ]


def test_gpt4o_register_width_mismatch():
    report = validate_block(parse_block(GPT4O))
    assert [(d.line, d.code) for d in report.diagnostics] == [(2, "MalformedRegister")]


@pytest.mark.parametrize("index,code,token", [
    (0, "BadOperandArity", "mov"),
    (1, "MalformedImmediate", "#r"),
    (2, "UndefinedSymbol", ".Lstrstr"),
    (3, "MalformedRegister", "w8"),
])
def test_incorrect_variants_flag_the_marked_token(index, code, token):
    _, bad, good = ERROR_ROWS[index]
    known = block_symbols(parse_block(good))
    report = validate_block(parse_block(bad), known)
    assert [(d.code, d.token) for d in report.diagnostics] == [(code, token)]
    assert validate_block(parse_block(good), known).valid


def test_mov_accepts_any_64bit_literal():
    assert validate_block(parse_block("mov x0, #0x123456789abcdef0")).valid


def test_add_immediate_range():
    assert validate_block(parse_block("add w0, w1, #4095")).valid
    assert not validate_block(parse_block("add w0, w1, #4096")).valid


def test_shift_amount_bound_for_32bit():
    assert validate_block(parse_block("add w0, w1, w2, lsl #31")).valid
    assert not validate_block(parse_block("add w0, w1, w2, lsl #32")).valid


def test_directives_always_pass():
    assert validate_block(parse_block(".p2align 2\n.cfi_startproc")).valid


def test_diagnostics_serialize_as_json_lines():
    report = validate_block(parse_block("movsl x8, x0, #2"))
    assert json.loads(report.diagnostics[0].to_json()) == {
        "line": 1, "code": "UnknownMnemonic", "message": "unknown mnemonic 'movsl'"}


def test_valid_iff_no_diagnostics():
    for text in [LLAMA2, GPT4O, GPT_O1]:
        report = validate_block(parse_block(text))
        assert report.valid == (len(report.diagnostics) == 0)


# --------------------------------------------------------------- properties

_REGS = [f"w{i}" for i in range(31)] + [f"x{i}" for i in range(31)] + ["wzr", "xzr"]
_X = [f"x{i}" for i in range(31)] + ["sp"]


def _imm():
    return st.one_of(st.integers(-(2 ** 63), 2 ** 64 - 1).map(str),
                     st.integers(0, 2 ** 32).map(hex))


def _operand():
    reg = st.sampled_from(_REGS)
    mem = st.builds(
        lambda base, disp, mode: {
            0: f"[{base}]", 1: f"[{base}, #{disp}]", 2: f"[{base}, #{disp}]!", 3: f"[{base}], #{disp}"
        }[mode],
        st.sampled_from(_X), st.integers(-256, 4095), st.integers(0, 3))
    indexed = st.builds(lambda b, i, a: f"[{b}, {i}, lsl #{a}]",
                        st.sampled_from(_X), st.sampled_from(_X[:-1]), st.integers(0, 3))
    shifted = st.builds(lambda r, s, a: f"{r}, {s} #{a}",
                        reg, st.sampled_from(["lsl", "lsr", "asr"]), st.integers(0, 31))
    return st.one_of(reg, _imm().map(lambda v: f"#{v}"), mem, indexed, shifted,
                     st.sampled_from([".LBB0_1", ":lo12:.L.str", "printf"]))


_line = st.builds(lambda m, ops: f"{m} " + ", ".join(ops),
                  st.sampled_from(["mov", "add", "sub", "ldr", "str", "and", "orr", "movsl", "adrp"]),
                  st.lists(_operand(), min_size=1, max_size=3))


@settings(max_examples=1000, deadline=None)
@given(st.lists(_line, min_size=1, max_size=10), st.booleans())
def test_round_trip_structural(lines, with_ret):
    text = "\n".join(lines + (["ret"] if with_ret else []))
    block = parse_block(text)
    printed = print_block(block)
    assert parse_block(printed) == block
    assert print_block(parse_block(printed)) == printed


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_round_trip_generated_blocks(seed):
    block = parse_block(random_block_text(random.Random(seed)))
    printed = print_block(block)
    assert parse_block(printed) == block
    assert print_block(parse_block(printed)) == printed


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="mov wx0123,#[]!:.-lsr \n", max_size=40))
def test_parser_never_crashes(text):
    try:
        block = parse_block(text)
    except ParseError:
        return
    assert isinstance(block, BasicBlock)
    assert all(isinstance(i, Instruction) for i in block.instructions)
