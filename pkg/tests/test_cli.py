import json
import os

import pytest

from regionlab import cli
from conftest import FIXTURE_DIR

FIG2 = os.path.join(FIXTURE_DIR, "fig2.ir")


def test_compile_table(capsys):
    assert cli.main(["compile", FIG2, "--heuristic", "H1"]) == 0
    out = capsys.readouterr().out
    assert "strategy" in out and "H1" in out


def test_compile_json(capsys):
    assert cli.main(["compile", FIG2, "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data[0]["strategy"] == "H0"


def test_compile_emits_artifacts(tmp_path, capsys):
    regions_path = tmp_path / "regions.json"
    trace_path = tmp_path / "trace.json"
    program_path = tmp_path / "out.ir"
    code = cli.main(
        [
            "compile", FIG2,
            "--heuristic", "H3",
            "--emit-regions", str(regions_path),
            "--emit-trace", str(trace_path),
            "--emit-program", str(program_path),
        ]
    )
    assert code == 0
    regions = json.loads(regions_path.read_text())
    assert any(r["seed"] == "F.2" for r in regions)
    trace = json.loads(trace_path.read_text())
    assert any(e["kind"] == "inline_performed" for e in trace["events"])
    assert "proc F" in program_path.read_text()
    capsys.readouterr()


def test_compile_set_overrides(capsys):
    code = cli.main(
        [
            "compile", FIG2,
            "--heuristic", "H1",
            "--set", "desirability_ratio=0.9",
            "--set", "growth_limit=0.0",
        ]
    )
    assert code == 0
    capsys.readouterr()


def test_compile_bad_set_key(capsys):
    assert cli.main(["compile", FIG2, "--set", "nonsense=1"]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_file_is_expected_error(capsys):
    assert cli.main(["compile", "/no/such/file.ir"]) == 1
    assert "error" in capsys.readouterr().err


def test_invalid_ir_is_expected_error(tmp_path, capsys):
    bad = tmp_path / "bad.ir"
    bad.write_text("proc main() {\nblock a:\n  what is this\n}\n")
    assert cli.main(["compile", str(bad)]) == 1
    capsys.readouterr()


def test_profile_output(tmp_path, capsys):
    out = tmp_path / "profile.json"
    assert cli.main(["profile", FIG2, "-o", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["blocks"]["G.8"] == 1
    assert data["dynamic_calls"] == 1
    capsys.readouterr()


def test_compare_multiple_heuristics(capsys):
    code = cli.main(
        ["compare", FIG2, "--heuristics", "H0,H1,H4", "--input", ""]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "H0" in out and "H4" in out


def test_compare_json(capsys):
    code = cli.main(
        [
            "compare", FIG2,
            "--heuristics", "H0,H1",
            "--input", "",
            "--format", "json",
        ]
    )
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["strategies"] == ["H0", "H1"]
    assert "H1-H0" in data["deltas"]


def test_gen_writes_valid_program(tmp_path, capsys):
    out = tmp_path / "gen.ir"
    assert cli.main(["gen", "--seed", "7", "-o", str(out)]) == 0
    import regionlab

    program = regionlab.parse_program(out.read_text())
    assert regionlab.validate(program) == []
    capsys.readouterr()


def test_check_small_corpus(capsys):
    assert cli.main(["check", "--count", "3"]) == 0
    assert "0 failures" in capsys.readouterr().out
