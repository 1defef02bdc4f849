import io
import json
from pathlib import Path

import pytest

from guardedlab import suite
from guardedlab.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_check_loeb_passes_on_chain(capsys):
    code, out, _ = run(capsys, "check-loeb", DATA / "omega5-frame.json")
    assert code == 0 and "PASS" in out.splitlines()[-1]
    code, _, _ = run(capsys, "check-loeb", DATA / "omega5.json")
    assert code == 0


def test_check_loeb_loop_frame_fails_at_bottom(capsys):
    code, out, _ = run(capsys, "check-loeb", DATA / "loop-frame.json")
    assert code == 1
    assert json.loads(out.splitlines()[-1]) == {"counterexample": "bot"}


def test_check_wf(capsys):
    code, out, _ = run(capsys, "check-wf", DATA / "diamond.json")
    assert code == 0 and "PASS  well_founded" in out
    code, out, _ = run(capsys, "check-wf", DATA / "omega5.json")
    assert code == 0


def test_check_wf_reports_failed_condition(tmp_path, capsys):
    bad = tmp_path / "loop.json"
    bad.write_text(json.dumps({"elements": [0, 1], "leq": [[0, 1]], "prec": [[0, 0]]}))
    code, out, _ = run(capsys, "check-wf", bad)
    assert code == 1 and "FAIL  well_founded" in out
    bad.write_text(json.dumps({"elements": [0, 1], "leq": [], "prec": [[0, 1]]}))
    code, out, _ = run(capsys, "check-wf", bad)
    assert code == 1 and "FAIL  subrelation" in out


def test_closure_warning(tmp_path, capsys):
    f = tmp_path / "p.json"
    f.write_text(json.dumps({"elements": [0, 1, 2], "leq": [[0, 1], [1, 2]], "prec": []}))
    code, _, err = run(capsys, "check-wf", f)
    assert code == 0 and "warning: leq closed under transitivity: 1 pair(s) added" in err


def test_eval_stream(capsys):
    code, out, _ = run(capsys, "eval-stream", "naturals", "--take", 4)
    assert code == 0 and json.loads(out.splitlines()[-1]) == [0, 1, 2, 3]
    code, out, _ = run(capsys, "eval-stream", "naturals", "--take", 0)
    assert json.loads(out.splitlines()[-1]) == []
    code, out, _ = run(capsys, "eval-stream", "naturals-mod-m", "--take", 5, "--modulus", 3)
    assert json.loads(out.splitlines()[-1]) == [0, 1, 2, 0, 1]
    code, _, err = run(capsys, "eval-stream", "primes")
    assert code == 2 and "/program" in err


def test_models_and_filters(capsys):
    code, out, _ = run(capsys, "models", DATA / "empty-theory.json")
    assert code == 0 and json.loads(out.splitlines()[-1])["count"] == 1
    code, out, _ = run(capsys, "models", DATA / "filt-chain2.json")
    assert json.loads(out.splitlines()[-1])["count"] == 2
    code, out, _ = run(capsys, "filters", DATA / "diamond.json")
    assert code == 0 and json.loads(out.splitlines()[-1])["count"] == 4


def test_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({"elements": [0], "leq": [], "prec": []})))
    code, out, _ = run(capsys, "filters", "-")
    assert code == 0 and json.loads(out.splitlines()[-1])["count"] == 1


def test_fixpoint(capsys):
    code, out, _ = run(capsys, "fixpoint", DATA / "zeros.json", "--stages", 3)
    assert code == 0
    assert json.loads(out.splitlines()[-1])[-1] == ["z"] * 4
    code, out, _ = run(capsys, "fixpoint", DATA / "naturals.json", "--stages", 4)
    assert code == 0 and json.loads(out.splitlines()[-1])[-1] == [0, 1, 2, 3, 4]


def test_bag(capsys):
    code, out, _ = run(capsys, "bag", DATA / "filt-chain2.json", "--max-k", 2)
    doc = json.loads(out.splitlines()[-1])
    assert code == 0 and (doc["raw"], doc["up_to_iso"]) == (1 + 2 + 4, 1 + 2 + 3)
    code, out, _ = run(capsys, "bag", DATA / "empty-theory.json", "--inhabited")
    doc = json.loads(out.splitlines()[-1])
    assert doc["raw"] == 3 and "exists k:K" in doc["theory"]


def test_plump_output_pipes_into_check_wf(tmp_path, capsys):
    code, out, _ = run(capsys, "plump", DATA / "unary.json", "--depth", 4)
    assert code == 0
    poset = json.loads(out)
    assert len(poset["elements"]) == 4
    f = tmp_path / "plump.json"
    f.write_text(out)
    code, out, _ = run(capsys, "check-wf", f)
    assert code == 0


@pytest.mark.parametrize("content,where", [
    ("{not json", "/"),
    (json.dumps({"elements": [0, 0], "leq": [], "prec": []}), "/elements"),
    (json.dumps({"elements": [0], "leq": [[0, 5]], "prec": []}), "/leq"),
    (json.dumps({"elements": [0, 1], "leq": [], "prec": [[0, 7]]}), "/prec"),
    (json.dumps([1, 2]), "/"),
])
def test_malformed_input_exit_2(tmp_path, capsys, content, where):
    f = tmp_path / "bad.json"
    f.write_text(content)
    code, _, err = run(capsys, "check-wf", f)
    assert code == 2 and f"malformed input at {where}" in err


def test_missing_file_and_negative_bounds(capsys):
    assert run(capsys, "check-wf", "/nonexistent.json")[0] == 2
    assert run(capsys, "fixpoint", DATA / "zeros.json", "--stages", -1)[0] == 2


def test_json_and_report_dir(tmp_path, capsys):
    out = tmp_path / "r.json"
    rd = tmp_path / "rep"
    code, _, _ = run(capsys, "check-wf", DATA / "diamond.json", "--json", out, "--report-dir", rd)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["ok"] and str(DATA / "diamond.json") in doc["inputs"]
    assert len(next(iter(doc["inputs"].values()))) == 64
    tsv = (rd / "report.tsv").read_text().splitlines()
    assert tsv[0].split("\t")[:2] == ["check", "status"]
    assert (rd / "checks.png").stat().st_size > 0 and (rd / "poset.png").stat().st_size > 0
    run(capsys, "eval-stream", "alternating", "--take", 6, "--report-dir", rd)
    assert (rd / "stream.png").exists()


def test_multiclock_small_bound(capsys):
    code, out, _ = run(capsys, "check-multiclock", "--bound", 2, "--stages", 4)
    assert code == 0 and out.count("PASS") == 6


def test_suite_deterministic():
    only = ["02_loeb_necessity", "03_fixpoints", "04_stream_programs", "08_bag_counts"]
    a = suite.run_suite(seed=5, stages=6, workers=4, only=only).as_dict(timings=False)
    b = suite.run_suite(seed=5, stages=6, workers=1, only=only).as_dict(timings=False)
    assert a == b
    assert [r["name"] for r in a["results"]] == only
