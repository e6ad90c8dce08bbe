import json
import os

import numpy as np
import pytest

from nci import build_haldane, build_honeycomb, chern_pairing, diagonalize, fermi_projection
from nci.exceptions import ParseError, SemanticError
from nci.harness import (EXPERIMENTS, read_records, rerun_record, run_sweep, splitmix64,
                         task_seed, validate_text)
from nci.harness.runner import summary_path

MINIMAL = """\
[sweep]
experiment = haldane_chern
seeds = 0, 1, 2
output = {out}

[params]
n1 = 6
n2 = 6
W = 1.0
"""


def config(tmp_path, text=MINIMAL, name="run.jsonl"):
    return validate_text(text.format(out=tmp_path / name))


# --- seeds --------------------------------------------------------------------


def test_splitmix_reference_values():
    # first outputs of the reference SplitMix64 generator seeded with 0
    state, outs = 0, []
    for _ in range(3):
        outs.append(splitmix64(state))
        state += 0x9E3779B97F4A7C15
    assert outs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_task_seed_formula():
    assert task_seed(7, 3, 5) == splitmix64(splitmix64(splitmix64(7) ^ 3) ^ 5)
    assert len({task_seed(0, g, s) for g in range(20) for s in range(20)}) == 400


# --- validation ----------------------------------------------------------------


def test_minimal_config_is_valid(tmp_path):
    cfg = config(tmp_path)
    assert cfg.experiment == "haldane_chern" and cfg.seeds == (0, 1, 2)
    assert cfg.grid_points()[0]["n1"] == 6


def test_grid_count_zero(tmp_path):
    text = MINIMAL + "\n[grid]\nE_F = -0.5, 0.5, 0\n"
    with pytest.raises(SemanticError, match="grid count"):
        config(tmp_path, text)


def test_unknown_experiment_lists_names(tmp_path):
    with pytest.raises(SemanticError) as info:
        config(tmp_path, MINIMAL.replace("haldane_chern", "nope"))
    msg = "\n".join(info.value.errors)
    assert all(name in msg for name in EXPERIMENTS)


def test_all_errors_reported_at_once(tmp_path):
    text = MINIMAL.replace("seeds = 0, 1, 2", "seeds = ") + "bogus = 1\n\n[grid]\nt2 = 0, 1, 0\n"
    with pytest.raises(SemanticError) as info:
        config(tmp_path, text)
    assert len(info.value.errors) >= 3


def test_parse_error_location(tmp_path):
    with pytest.raises(ParseError) as info:
        config(tmp_path, "[sweep]\nexperiment = haldane_chern\nthis line is broken\n")
    assert info.value.line == 3 and info.value.column == 1


def test_seed_ranges(tmp_path):
    cfg = config(tmp_path, MINIMAL.replace("0, 1, 2", "0-4, 9"))
    assert cfg.seeds == (0, 1, 2, 3, 4, 9)


def test_wire_shorthand(tmp_path):
    text = "[sweep]\nexperiment = lyapunov\nseeds = 0\noutput = {out}\n[grid]\nW = 0, 2, 3\n"
    pts = config(tmp_path, text).grid_points()
    assert [(p["W1"], p["W2"]) for p in pts] == [(0, 0), (0.5, 1), (1, 2)]


# --- sweeps --------------------------------------------------------------------


def test_three_records_and_summary(tmp_path):
    rep = run_sweep(config(tmp_path))
    assert len(rep.records) == 3 and len(rep.summary) == 1
    assert all(r["status"] == "ok" for r in rep.records)
    row = rep.summary[0]
    vals = np.array([complex(*r["value"]) for r in rep.records])
    assert row.n_ok == 3 and row.mean == pytest.approx(vals.mean())
    assert row.stderr_re == pytest.approx(np.std(vals.real, ddof=1) / np.sqrt(3))
    with open(summary_path(rep.output)) as fh:
        assert len(fh.read().splitlines()) == 2


def test_record_matches_direct_computation(tmp_path):
    rec = run_sweep(config(tmp_path)).records[0]
    p = build_honeycomb(6, 6)
    from nci import sample_disorder
    H = build_haldane(p, 0.6, 1.0, sample_disorder(p, rec["task_seed"]))
    res = chern_pairing(fermi_projection(diagonalize(H), 0.0))
    assert complex(*rec["value"]) == res.value


def test_determinism(tmp_path):
    a = run_sweep(config(tmp_path, name="a.jsonl"))
    b = run_sweep(config(tmp_path, name="b.jsonl"))
    assert [r["value"] for r in a.records] == [r["value"] for r in b.records]


def test_worker_count_independence(tmp_path):
    text = MINIMAL + "\n[grid]\nE_F = -0.3, 0.3, 2\n"
    one = run_sweep(config(tmp_path, text, "one.jsonl"), threads=1)
    two = run_sweep(config(tmp_path, text, "two.jsonl"), threads=2)
    by_key = lambda rep: {r["key"]: r["value"] for r in rep.records}
    assert by_key(one) == by_key(two)
    for r1, r2 in zip(one.summary, two.summary):
        assert abs(r1.mean - r2.mean) <= 1e-12


def test_resume_after_truncation(tmp_path):
    cfg = config(tmp_path)
    full = run_sweep(cfg)
    path = full.output
    with open(path) as fh:
        lines = fh.readlines()
    with open(path, "w") as fh:
        fh.write(lines[0] + lines[1][: len(lines[1]) // 2])
    rep = run_sweep(cfg, resume=True)
    assert rep.skipped == 1
    assert len(read_records(path)) == 3
    assert {r["key"]: r["value"] for r in rep.records} == {r["key"]: r["value"] for r in full.records}


def test_errors_are_recorded(tmp_path):
    # a collar wider than the patch leaves an empty window
    text = ("[sweep]\nexperiment = amorphous_chern\nseeds = 0\noutput = {out}\nwindow = 100\n"
            "[params]\ncount = 30\n")
    rep = run_sweep(config(tmp_path, text))
    assert rep.failed == 1
    assert rep.records[0]["status"] == "error" and "EmptyWindow" in rep.records[0]["error"]


def test_records_are_self_describing(tmp_path):
    rep = run_sweep(config(tmp_path))
    with open(rep.output) as fh:
        rec = json.loads(fh.readline())
    again = rerun_record(rec)
    assert again["value"] == rec["value"]
    for key in ("experiment", "params", "seed_index", "task_seed", "value", "quantized_value",
                "deviation", "diagnostics", "wall_time_ms", "code_version", "status"):
        assert key in rec


def test_fresh_run_overwrites(tmp_path):
    cfg = config(tmp_path)
    run_sweep(cfg)
    rep = run_sweep(cfg)
    assert len(read_records(rep.output)) == 3 and os.path.exists(summary_path(rep.output))
