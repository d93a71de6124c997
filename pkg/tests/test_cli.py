import json
import re
import subprocess
import sys

import pytest

from boundext.cli import EXIT_SOLVER, EXIT_USAGE, EXIT_VALIDATION, main, random_probe_rects
from boundext.conformal import covers_unit_circle
from boundext.conformal.cover import rect_from_list
from boundext.domain import load_domain

ERROR_LINE = re.compile(r"^boundext: (usage|validation|solver): \S.*$")


@pytest.fixture
def tables(tmp_path):
    tent = tmp_path / "tent.json"
    tent.write_text(json.dumps({"n_max": 4, "s_max": 9, "entries": [[0, 2]]}))
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"n_max": 4, "s_max": 9, "entries": []}))
    mixed = tmp_path / "mixed.json"
    mixed.write_text(json.dumps({"n_max": 5, "s_max": 12, "entries": [[0, 3], [2, 0], [3, 7]]}))
    return {"tent": tent, "empty": empty, "mixed": mixed}


def run_cli(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def assert_error_line(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1 and ERROR_LINE.match(lines[0]), err


def test_gen_one_tent(capsys, tables, tmp_path):
    code, out, _ = run_cli(capsys, "gen", "--table", tables["tent"], "--depth", 1, "--out", tmp_path / "g")
    assert code == 0
    summary = json.loads(out)
    assert summary["tents"] == 1 and summary["spikes"] == 0
    svg = (tmp_path / "g" / "domain.svg").read_text()
    assert svg.count("<path") == 6
    assert re.search(r'class="tent"[^>]*d="M0\.53125 0 L0\.5 0\.5 L0\.46875 0"', svg)
    dm = load_domain((tmp_path / "g" / "domain.json").read_text())
    assert dm.depth == 1


def test_gen_three_spikes(capsys, tables, tmp_path):
    code, out, _ = run_cli(capsys, "gen", "--table", tables["empty"], "--depth", 3, "--out", tmp_path)
    assert code == 0
    svg = (tmp_path / "domain.svg").read_text()
    assert svg.count('class="spike"') == 3 and 'class="tent"' not in svg


def test_gen_depth_zero_is_usage_error(capsys, tables, tmp_path):
    code, _, err = run_cli(capsys, "gen", "--table", tables["tent"], "--depth", 0, "--out", tmp_path)
    assert code == EXIT_USAGE
    assert_error_line(err)


def test_gen_bad_table_is_validation_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_max": 2, "s_max": 3, "entries": [[5, 1]]}))
    code, _, err = run_cli(capsys, "gen", "--table", bad, "--depth", 1, "--out", tmp_path)
    assert code == EXIT_VALIDATION
    assert_error_line(err)


def test_analyze_matches_ground_truth(capsys, tables, tmp_path):
    for name, depth in (("tent", 1), ("empty", 3), ("mixed", 4)):
        out_dir = tmp_path / name
        assert run_cli(capsys, "gen", "--table", tables[name], "--depth", depth, "--out", out_dir)[0] == 0
        code, _, _ = run_cli(capsys, "analyze", "--domain", out_dir / "domain.json", "--out", out_dir)
        assert code == 0
        rep = json.loads((out_dir / "analysis.json").read_text())
        assert rep["agrees"] and rep["mlc_valid"]
        assert rep["reduction"] == rep["ground_truth"]


def test_analyze_rejects_non_increasing(capsys, tables, tmp_path):
    bcf = tmp_path / "g.json"
    bcf.write_text(json.dumps({"g": [[0, 3], [1, 2], [2, 4]]}))
    code, _, err = run_cli(capsys, "analyze", "--table", tables["tent"], "--depth", 1, "--bcf", bcf, "--out", tmp_path)
    assert code == EXIT_VALIDATION
    assert_error_line(err)
    assert "non-decreasing" in err


def test_analyze_reports_counterexample_for_zero(capsys, tables, tmp_path):
    bcf = tmp_path / "g.json"
    bcf.write_text(json.dumps({"g": [[k, 0] for k in range(5)]}))
    code, _, err = run_cli(
        capsys, "analyze", "--table", tables["empty"], "--depth", 3, "--bcf", bcf, "--out", tmp_path
    )
    assert code == EXIT_VALIDATION
    assert_error_line(err)
    ce = json.loads((tmp_path / "analysis.json").read_text())["user_bcf"]["counterexample"]
    assert ce["distance"] <= 1.0 and len(ce["p"]) == 2 and len(ce["q"]) == 2


def test_conformal_missing_domain_is_usage_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "conformal", "--domain", tmp_path / "nope.json", "--out", tmp_path)
    assert code == EXIT_USAGE
    assert_error_line(err)


def test_conformal_solver_failure(capsys, tmp_path):
    table = tmp_path / "t.json"
    table.write_text(json.dumps({"n_max": 8, "s_max": 4, "entries": []}))
    code, _, err = run_cli(capsys, "conformal", "--table", table, "--depth", 6, "--out", tmp_path)
    assert code == EXIT_SOLVER
    assert_error_line(err)
    assert "crowding" in err


def test_conformal_square_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        code, out, _ = run_cli(capsys, "conformal", "--square", "--kmax", 1, "--probes", 10, "--out", d)
        assert code == 0
    assert json.loads(out)["seconds"] < 60
    names = sorted(p.name for p in a.iterdir())
    assert names == ["cover-1.json", "map.json", "reports.json", "strong_eval.json"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    cover = json.loads((a / "cover-1.json").read_text())
    assert covers_unit_circle([rect_from_list(e["rect"]) for e in cover["elements"]])
    rep = json.loads((a / "reports.json").read_text())
    assert all(c["witness"]["verdict"] != "fail" for c in rep["theorem_checks"])


def test_enum_prefix(capsys, tables, tmp_path):
    code, out, _ = run_cli(
        capsys, "enum", "--table", tables["tent"], "--depth", 1, "--stream", "open-D", "--count", 7, "--out", tmp_path
    )
    assert code == 0 and json.loads(out)["emitted"] == 7
    rows = json.loads((tmp_path / "enum-open-D.json").read_text())["rects"]
    assert [r["level"] for r in rows] == sorted(r["level"] for r in rows)
    assert all(r["kind"] == "closed" for r in rows)


@pytest.mark.parametrize("name", ["gap-identity", "arc-floor", "reduction"])
def test_named_checks(capsys, tables, tmp_path, name):
    code, out, _ = run_cli(capsys, "check", name, "--table", tables["mixed"], "--depth", 4, "--out", tmp_path)
    assert code == 0 and json.loads(out)["passed"]


def test_usage_errors(capsys, tables, tmp_path):
    for args in (
        ["bogus"],
        ["gen"],
        ["gen", "--table", tables["tent"]],
        ["gen", "--square", "--table", tables["tent"], "--depth", 1],
        ["conformal", "--square", "--kmax", 9],
        ["check", "no-such-check", "--square"],
    ):
        code, _, err = run_cli(capsys, *args)
        assert code == EXIT_USAGE, args
        assert_error_line(err)


def test_probe_rects_reproducible():
    assert random_probe_rects(5, 3) == random_probe_rects(5, 3)
    assert random_probe_rects(5, 3) != random_probe_rects(5, 4)


def test_console_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "boundext.cli", "gen", "--depth", "1"], capture_output=True, text=True, cwd=tmp_path
    )
    assert res.returncode == EXIT_USAGE
    assert_error_line(res.stderr)


def test_conformal_spikes_four_covers(capsys, tables, tmp_path):
    code, out, _ = run_cli(
        capsys, "conformal", "--table", tables["empty"], "--depth", 2, "--kmax", 4, "--probes", 20, "--out", tmp_path
    )
    assert code == 0
    assert json.loads(out)["covers"] == 4
    for k in range(1, 5):
        cover = json.loads((tmp_path / f"cover-{k}.json").read_text())
        assert cover["k"] == k
        assert covers_unit_circle([rect_from_list(e["rect"]) for e in cover["elements"]])
