import csv
import json
import subprocess
import sys

import pytest

from golden_blocks import ERROR_ROWS, GPT_O1, LLVM, ROWS
from peephole_bench import __version__
from peephole_bench.adapters import PromptSpec, build_prompt, prime_cache, select_shots
from peephole_bench.cli import main
from peephole_bench.corpus import Dataset, SamplePair, Source


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    assert run("extract", "--synthetic", 40, "--seed", 7, "--out", root / "d.jsonl") == 0
    return root / "d.jsonl"


def _listing(name: str, body: str) -> str:
    return (f"\t.globl\t{name}\n{name}:\n\t.cfi_startproc\n{body}\n"
            f".Lfunc_end0:\n\t.cfi_endproc\n")


# ------------------------------------------------------------------ extract

def test_extract_synthetic_is_deterministic(tmp_path, synth):
    again = tmp_path / "again.jsonl"
    assert run("extract", "--synthetic", 40, "--seed", 7, "--out", again) == 0
    assert again.read_text() == synth.read_text()
    a = json.loads((synth.parent / "d.manifest.json").read_text())
    b = json.loads((tmp_path / "again.manifest.json").read_text())
    a.pop("created"), b.pop("created")
    assert a == b and a["n"] == 40


def test_extract_directory(tmp_path):
    src, out = ROWS["ConstantFolding"]
    d = tmp_path / "in"
    d.mkdir()
    (d / "cf.O0.s").write_text(_listing("cf", src))
    (d / "cf.opt.s").write_text(_listing("cf", out))
    assert run("extract", d, "--out", tmp_path / "ds.jsonl") == 0
    ds = Dataset.load(tmp_path / "ds.jsonl")
    assert len(ds) == 1 and ds.manifest["counts"] == {"in": 1}


def test_extract_parse_failure_exits_2_with_log(tmp_path):
    d = tmp_path / "in"
    d.mkdir()
    (d / "bad.O0.s").write_text(_listing("f", "mov w0,, #1\nret"))
    (d / "bad.opt.s").write_text(_listing("f", "ret"))
    assert run("extract", d, "--out", tmp_path / "ds.jsonl") == 2
    assert "bad.O0.s" in (tmp_path / "ds.errors.log").read_text()


def test_extract_max_lines(tmp_path):
    assert run("extract", "--synthetic", 30, "--max-lines", 6, "--out", tmp_path / "d.jsonl") == 0
    for p in Dataset.load(tmp_path / "d.jsonl"):
        assert len([l for l in p.nonopt.split("\n") if not l.startswith(".")]) <= 6
    assert run("extract", "--synthetic", 3, "--max-lines", 16, "--out", tmp_path / "e.jsonl") == 2


def test_input_errors_exit_2(tmp_path):
    assert run("extract") == 2
    assert run("evaluate", "--dataset", tmp_path / "missing.jsonl", "--candidates", "x") == 2
    assert run("no-such-command") == 2


# ----------------------------------------------------------------- optimize

def test_optimize_oracle_candidates_equal_references(tmp_path, synth):
    cands = tmp_path / "c.jsonl"
    assert run("optimize", "--dataset", synth, "--adapter", "oracle", "--out", cands) == 0
    rows = [json.loads(l) for l in cands.read_text().splitlines()]
    refs = {p.id: p.opt for p in Dataset.load(synth)}
    assert all(r["candidate"] == refs[r["id"]] for r in rows)
    assert set(rows[0]) == {"id", "candidate", "latency_ms", "adapter"}
    prov = json.loads((tmp_path / "c.run.json").read_text())
    assert prov["run_config"]["shots"] == 3
    assert prov["tool"] == {"name": "peephole-bench", "version": __version__}
    assert prov["dataset_manifest_hash"] == Dataset.load(synth).manifest_hash()


def test_optimize_replay_without_cache_lists_misses(tmp_path, synth, capsys):
    code = run("optimize", "--dataset", synth, "--adapter", "replay",
               "--cache", tmp_path / "cache", "--out", tmp_path / "c.jsonl")
    assert code == 2
    assert "40 cache misses" in capsys.readouterr().err


def test_optimize_replay_with_primed_cache(tmp_path, synth):
    ds = Dataset.load(synth)
    shots = select_shots(ds.pairs, 2, 0)
    prime_cache(tmp_path / "cache", [(build_prompt(PromptSpec(p.nonopt, shots)), p.opt, 10)
                                     for p in ds])
    out = tmp_path / "c.jsonl"
    assert run("optimize", "--dataset", synth, "--adapter", "replay", "--shots", 2,
               "--cache", tmp_path / "cache", "--out", out) == 0
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert all(r["latency_ms"] == 10 and r["adapter"] == "replay" for r in rows)


# ----------------------------------------------------------------- evaluate

def test_evaluate_oracle_is_perfect(tmp_path, synth):
    cands = tmp_path / "c.jsonl"
    run("optimize", "--dataset", synth, "--out", cands)
    assert run("evaluate", "--dataset", synth, "--candidates", cands, "--trials", 20,
               "--out", tmp_path / "r") == 0
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    o = summary["overall"]
    assert (o["bleu"], o["emr"], o["syntactic"], o["io"]) == (1.0, 1.0, 1.0, 1.0)
    assert summary["run_config"]["trials"] == 20
    assert len((tmp_path / "r" / "samples.jsonl").read_text().splitlines()) == 40


def test_evaluate_corrupted_candidates(tmp_path, synth):
    ds = Dataset.load(synth)
    lines = [json.dumps({"id": p.id, "candidate": "\x00garbage,,"}) for p in ds.pairs[:20]]
    lines += ["{not json", json.dumps({"no": "id"})]
    cands = tmp_path / "c.jsonl"
    cands.write_text("\n".join(lines) + "\n")
    assert run("evaluate", "--dataset", synth, "--candidates", cands, "--trials", 5,
               "--out", tmp_path / "r") == 0
    rows = [json.loads(l) for l in (tmp_path / "r" / "samples.jsonl").read_text().splitlines()]
    assert len(rows) == 40 and all(r["syntactic"] == 0 for r in rows)


def test_evaluate_per_source_rows(tmp_path):
    a = SamplePair(LLVM, LLVM, Source("ingested", "alpha", "a.s", "f", 0))
    b = SamplePair("mov w0, #2\nadd w0, w0, #3\nret", "mov w0, #5\nret",
                   Source("ingested", "beta", "b.s", "g", 0))
    c = SamplePair("mov w0, #1\nret", "mov w0, #1\nret", Source("synthetic", "gamma", seed=1))
    path = Dataset([a, b, c]).save(tmp_path / "d.jsonl")
    cands = tmp_path / "c.jsonl"
    cands.write_text("".join(json.dumps({"id": p.id, "candidate": q}) + "\n"
                             for p, q in [(a, GPT_O1), (b, "mov w0, #5\nret"), (c, "ret")]))
    assert run("evaluate", "--dataset", path, "--candidates", cands, "--out", tmp_path / "r") == 0
    text = (tmp_path / "r" / "summary.txt").read_text().splitlines()
    assert [line.split()[0] for line in text] == ["Source", "alpha", "beta", "gamma", "all"]
    by = json.loads((tmp_path / "r" / "summary.json").read_text())["by_source"]
    assert (by["alpha"]["emr"], by["alpha"]["io"]) == (0.0, 1.0)
    assert by["beta"]["emr"] == 1.0 and by["gamma"]["io"] == 0.0


def test_evaluate_parallel_matches_serial(tmp_path, synth):
    cands = tmp_path / "c.jsonl"
    run("optimize", "--dataset", synth, "--out", cands)
    run("evaluate", "--dataset", synth, "--candidates", cands, "--trials", 5, "--out", tmp_path / "a")
    run("evaluate", "--dataset", synth, "--candidates", cands, "--trials", 5, "--jobs", 2,
        "--out", tmp_path / "b")
    assert (tmp_path / "a" / "samples.jsonl").read_text() == \
        (tmp_path / "b" / "samples.jsonl").read_text()


# ------------------------------------------------------------------- errors

def _error_fixture(tmp_path):
    pairs, cands = [], []
    for i, (_, bad, good) in enumerate(ERROR_ROWS):
        p = SamplePair(good, good, Source("ingested", "llama", "e.s", f"f{i}", 0))
        pairs.append(p)
        cands.append(json.dumps({"id": p.id, "candidate": bad}))
    path = Dataset(pairs).save(tmp_path / "d.jsonl")
    (tmp_path / "c.jsonl").write_text("\n".join(cands) + "\n")
    return path, tmp_path / "c.jsonl"


def test_errors_four_categories_one_each(tmp_path):
    ds, cands = _error_fixture(tmp_path)
    assert run("errors", "--dataset", ds, "--candidates", cands, "--out", tmp_path / "e") == 0
    report = json.loads((tmp_path / "e" / "errors.json").read_text())
    assert report["categories"] == {"Opcode": 1, "Register": 1, "ImmediateValue": 1, "Label": 1}
    assert report["failing_samples"] == 4
    assert len((tmp_path / "e" / "errors.jsonl").read_text().splitlines()) == 4


def test_errors_min_samples_filter(tmp_path):
    ds, cands = _error_fixture(tmp_path)
    run("errors", "--dataset", ds, "--candidates", cands, "--min-samples", 1,
        "--out", tmp_path / "e")
    rows = list(csv.DictReader((tmp_path / "e" / "mnemonic_stats.csv").open()))
    # reference side: mov x3, ret x2, everything else once
    assert [r["Instr"] for r in rows] == ["mov", "ret"]
    run("errors", "--dataset", ds, "--candidates", cands, "--out", tmp_path / "f")
    assert json.loads((tmp_path / "f" / "errors.json").read_text())["per_mnemonic"] == []


def test_errors_zero_error_run(tmp_path, synth):
    cands = tmp_path / "c.jsonl"
    run("optimize", "--dataset", synth, "--out", cands)
    assert run("errors", "--dataset", synth, "--candidates", cands, "--scope", "mismatch",
               "--out", tmp_path / "e") == 0
    report = json.loads((tmp_path / "e" / "errors.json").read_text())
    assert report["failing_samples"] == 0 and set(report["categories"].values()) == {0}
    assert report["top10"] == [] or report["per_mnemonic"][0]["error_count"] == 0


# -------------------------------------------------------------- shots sweep

def test_shots_sweep_oracle_constant(tmp_path, synth):
    assert run("shots-sweep", "--dataset", synth, "--k-range", "0-5", "--samples", 20,
               "--trials", 5, "--out", tmp_path / "s") == 0
    rows = list(csv.DictReader((tmp_path / "s" / "sweep.csv").open()))
    assert [int(r["k"]) for r in rows] == [0, 1, 2, 3, 4, 5]
    assert {r["emr"] for r in rows} == {"1.000000"}
    doc = json.loads((tmp_path / "s" / "sweep.json").read_text())
    assert doc["run_config"]["extra"]["samples"] == 20


def test_reports_are_byte_identical(tmp_path, synth):
    snapshots = []
    for _ in range(2):
        run("optimize", "--dataset", synth, "--out", tmp_path / "c.jsonl")
        run("evaluate", "--dataset", synth, "--candidates", tmp_path / "c.jsonl",
            "--trials", 5, "--out", tmp_path / "r")
        run("shots-sweep", "--dataset", synth, "--k-range", "0-2", "--samples", 5,
            "--trials", 5, "--out", tmp_path / "s")
        snapshots.append({p.relative_to(tmp_path): p.read_bytes()
                          for p in sorted(tmp_path.rglob("*")) if p.is_file()})
    assert snapshots[0] == snapshots[1]
    assert len(snapshots[0]) == 7


def test_bad_k_range(tmp_path, synth):
    assert run("shots-sweep", "--dataset", synth, "--k-range", "0-9", "--out", tmp_path) == 2


# -------------------------------------------------------------- block tools

def test_peephole_command(capsys):
    assert run("peephole", "mov w0, #2\\nadd w0, w0, #3\\nret", "--trace") == 0
    out, err = capsys.readouterr()
    assert out == "mov w0, #5\nret\n"
    assert json.loads(err)["applied"][0]["rule"] == "fold-constant"


def test_peephole_rename_result(capsys):
    assert run("peephole", "lsl w8, w8, #1\\nlsr w8, w8, #0\\nret", "--rename-result") == 0
    assert capsys.readouterr().out == "lsl w0, w0, #1\nret\n"


def test_validate_command(tmp_path, capsys):
    f = tmp_path / "b.s"
    f.write_text("movsl x8, x0, #2\nret\n")
    assert run("validate", f) == 2
    assert "UnknownMnemonic" in capsys.readouterr().out
    assert run("validate", "mov w0, #5\\nret") == 0
    assert run("validate", "mov w0,, #5") == 2


def test_equiv_command(capsys):
    assert run("equiv", GPT_O1, LLVM, "--trials", 100) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "Equivalent"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "peephole_bench", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
