import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from golden_blocks import ROWS
from peephole_bench.asm import parse_block, print_block, validate_block
from peephole_bench.corpus import (
    MAX_LINES,
    NORMALIZER_VERSION,
    Dataset,
    NotEnoughSamples,
    SamplePair,
    Source,
    UnparseableFile,
    content_id,
    corpus_stats,
    extract_pairs,
    ingest_directory,
    manifest_path,
    normalize,
    sample,
    strip_metadata,
    synth_blocks,
    synthetic_dataset,
)
from peephole_bench.interp import io_equivalent
from peephole_bench.peephole import optimize


def listing(name: str, body: str, extra: str = "") -> str:
    return (f"\t.text\n\t.file\t\"{name}.c\"\n\t.globl\t{name}\n\t.p2align\t2\n"
            f"\t.type\t{name},@function\n{name}:\n\t.cfi_startproc\n{body}\n"
            f".Lfunc_end0:\n\t.size\t{name}, .Lfunc_end0-{name}\n\t.cfi_endproc\n{extra}")


def _pair(nonopt: str, opt: str = "ret", tag: str = "t") -> SamplePair:
    return SamplePair(nonopt, opt, Source("ingested", tag, "f.s", "f", 0))


# --------------------------------------------------------------- extraction

def test_single_function_single_block():
    skips = []
    pairs = extract_pairs(listing("f", "mov w0, #2\nadd w0, w0, #3\nret"),
                          listing("f", "mov w0, #5\nret"), "f.O0.s", skips=skips)
    assert len(pairs) == 1 and skips == []
    p = pairs[0]
    assert (p.source.function, p.source.block_ordinal) == ("f", 0)
    assert "mov w0, #5" in p.opt


def test_function_only_in_optimized_listing():
    skips = []
    pairs = extract_pairs("\t.text\n", listing("g", "mov w0, #1\nret"), skips=skips)
    assert pairs == []
    assert [(s.function, s.reason) for s in skips] == [("g", "function only in optimized listing")]


def test_changed_block_count_is_skipped():
    skips = []
    two = "cbz w0, .LBB0_2\nmov w0, #1\n.LBB0_2:\nret"
    pairs = extract_pairs(listing("f", two), listing("f", "ret"), skips=skips)
    assert pairs == [] and "block count differs" in skips[0].reason


def test_blocks_split_at_labels_and_terminators():
    body = "cmp w0, #1\nb.eq .LBB0_2\nmov w0, #7\n.LBB0_2:\nadd w0, w0, #1\nret"
    pairs = extract_pairs(listing("f", body), listing("f", body))
    assert [p.source.block_ordinal for p in pairs] == [0, 1, 2]
    assert pairs[1].nonopt.endswith("mov w0, #7")


def test_constant_folding_listing_matches_engine_output():
    src, published = ROWS["ConstantFolding"]
    pair = normalize(extract_pairs(listing("cf", src), listing("cf", published)))[0]
    # cfi directives are kept, so the block still opens with .cfi_startproc
    assert print_block(optimize(parse_block(pair.nonopt))[0]) == pair.opt
    assert pair.opt == ".cfi_startproc\n" + published


def test_unparseable_listing():
    with pytest.raises(UnparseableFile) as info:
        extract_pairs(listing("f", "mov w0,, #1\nret"), listing("f", "ret"), "bad.O0.s")
    assert info.value.line == 8 and info.value.file == "bad.O0.s"


# ------------------------------------------------------------ normalization

def test_long_block_dropped_and_limit_kept():
    sixteen = "\n".join(["add w0, w0, #1"] * 15 + ["ret"])
    fifteen = "\n".join(["add w0, w0, #1"] * 14 + ["ret"])
    out = normalize([_pair(sixteen), _pair(fifteen)])
    assert [p.nonopt for p in out] == [fifteen]
    assert MAX_LINES == 15


def test_duplicates_removed():
    assert len(normalize([_pair("mov w0, #1\nret"), _pair("mov w0, #1\nret")])) == 1


def test_attribute_lines_removed_block_kept():
    out = normalize([_pair(".globl f\n.p2align 2\nf:\n.cfi_startproc\nmov w0, #1\nret")])
    assert out[0].nonopt == "f:\n.cfi_startproc\nmov w0, #1\nret"


def test_strip_metadata_keeps_local_labels():
    assert strip_metadata(".LBB0_1:\n\t.section .text\n  add w0, w0, #1 // c") == \
        ".LBB0_1:\nadd w0, w0, #1"


def test_normalizer_version_recorded():
    assert Dataset([]).manifest["normalization"] == NORMALIZER_VERSION


_lines = st.lists(st.sampled_from([
    "mov w0, #1", "add w0, w0, #2", "ret", ".globl f", ".p2align 2", ".cfi_def_cfa_offset 16",
    "f:", ".LBB0_1:", "ldr x8, [sp, #8]", "\t.size f, 4", "lsl w1, w1, #3  // shift",
]), min_size=1, max_size=20)


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.tuples(_lines, _lines), max_size=6))
def test_normalize_is_idempotent(raw):
    pairs = []
    for a, b in raw:
        try:
            pairs.append(_pair("\n".join(a), "\n".join(b)))
        except Exception:
            continue  # directive-only text has nothing to histogram
    once = normalize(pairs)
    assert normalize(once) == once
    for p in once:
        assert len(parse_block(p.nonopt)) <= MAX_LINES
        assert p.id == content_id(p.nonopt, p.opt)
    assert len({p.id for p in once}) == len(once)


# ------------------------------------------------------------------ dataset

def test_ids_unique():
    p = _pair("mov w0, #1\nret")
    with pytest.raises(ValueError):
        Dataset([p, p])
    assert len(Dataset.from_pairs([p, p])) == 1


def test_save_load_round_trip(tmp_path):
    ds = synthetic_dataset(25, 3)
    path = ds.save(tmp_path / "d.jsonl")
    assert manifest_path(path).exists()
    back = Dataset.load(path)
    assert [p.to_json() for p in back] == [p.to_json() for p in ds]
    assert back.manifest_hash() == ds.manifest_hash()
    row = json.loads(path.read_text().splitlines()[0])
    assert set(row) == {"id", "source", "nonopt", "opt", "histogram"}
    assert row["source"]["kind"] == "synthetic"


def test_manifest_hash_ignores_creation_time():
    a = Dataset([_pair("mov w0, #1\nret")], {"created": "2020-01-01T00:00:00+00:00"})
    b = Dataset([_pair("mov w0, #1\nret")], {"created": "2021-01-01T00:00:00+00:00"})
    assert a.manifest_hash() == b.manifest_hash()
    assert a.manifest["counts"] == {"t": 1}


# ----------------------------------------------------------------- sampling

_SMALL = synthetic_dataset(60, 11)


@pytest.fixture(scope="module")
def small() -> Dataset:
    return _SMALL


def test_sample_all_is_identity_up_to_order(small):
    assert {p.id for p in sample(small, len(small), 1)} == {p.id for p in small}


def test_sample_deterministic(small):
    assert [p.id for p in sample(small, 10, 42)] == [p.id for p in sample(small, 10, 42)]
    assert [p.id for p in sample(small, 10, 42)] != [p.id for p in sample(small, 10, 43)]


def test_sample_zero_and_too_many(small):
    assert len(sample(small, 0, 1)) == 0
    with pytest.raises(NotEnoughSamples):
        sample(small, len(small) + 1, 1)


def test_sample_manifest(small):
    assert sample(small, 5, 9).manifest["sample"] == {"n": 5, "seed": 9}


@settings(max_examples=1000, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 60), st.integers(0, 2 ** 32))
def test_sample_permutation_invariant(rnd, n, seed):
    ds = _SMALL
    shuffled = list(ds.pairs)
    rnd.shuffle(shuffled)
    a = sample(ds, n, seed)
    b = sample(Dataset(shuffled), n, seed)
    assert [p.id for p in a] == [p.id for p in b]


# ---------------------------------------------------------------- synthesis

@pytest.fixture(scope="module")
def synth():
    return synth_blocks(300, 5)


def test_synthetic_blocks_valid_and_bounded(synth):
    for p in synth:
        assert validate_block(parse_block(p.nonopt)).valid
        assert len(parse_block(p.nonopt)) <= MAX_LINES


def test_synthetic_pairs_equivalent(synth):
    for p in synth[:150]:
        assert io_equivalent(parse_block(p.nonopt), parse_block(p.opt), 30).equivalent


def test_synthetic_opt_side_is_engine_output(synth):
    for p in synth[:50]:
        assert print_block(optimize(parse_block(p.nonopt))[0]) == p.opt


def test_synthetic_deterministic(synth):
    assert [p.id for p in synth_blocks(300, 5)] == [p.id for p in synth]


def test_synthetic_blocks_mostly_shrink(synth):
    shrunk = sum(len(parse_block(p.opt)) < len(parse_block(p.nonopt)) for p in synth)
    assert shrunk / len(synth) >= 0.6


def test_max_len_respected():
    assert all(len(parse_block(p.nonopt)) <= 6 for p in synth_blocks(50, 2, max_len=6))
    with pytest.raises(ValueError):
        synth_blocks(1, 1, max_len=16)


# -------------------------------------------------------------------- stats

def test_corpus_stats_single_block():
    assert corpus_stats([_pair("mov w0, #5\nret")]) == {"mov": 1, "ret": 1}


def test_corpus_stats_sorted_descending(small):
    counts = list(corpus_stats(small).values())
    assert counts == sorted(counts, reverse=True)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 60), st.integers(0, 60))
def test_corpus_stats_additive(i, j):
    a, b = _SMALL.pairs[:i], _SMALL.pairs[i:i + j]
    joined = corpus_stats(a + b)
    left, right = corpus_stats(a), corpus_stats(b)
    for k in set(left) | set(right):
        assert joined[k] == left.get(k, 0) + right.get(k, 0)


def test_corpus_stats_opt_side():
    assert corpus_stats([_pair("mov w0, #2\nadd w0, w0, #3\nret", "mov w0, #5\nret")],
                        side="opt") == {"mov": 1, "ret": 1}


# ---------------------------------------------------------------- ingestion

def test_ingest_directory(tmp_path):
    src, out = ROWS["ConstantFolding"]
    (tmp_path / "a.O0.s").write_text(listing("a", src))
    (tmp_path / "a.opt.s").write_text(listing("a", out))
    (tmp_path / "b.O0.s").write_text(listing("b", "mov w0,, #1\nret"))
    (tmp_path / "b.opt.s").write_text(listing("b", "ret"))
    (tmp_path / "c.O0.s").write_text(listing("c", "ret"))
    res = ingest_directory(tmp_path, jobs=2)
    assert len(res.pairs) == 1 and res.pairs[0].source.tag == tmp_path.name
    assert [e.file for e in res.errors] == ["b.O0.s"]
    assert any("no matching" in s.reason for s in res.skips)
