from __future__ import annotations

import json
import subprocess
import sys

import pytest

from modsplit.cli import main


def test_run_summary(capsys):
    assert main(["run", "--case", "su3-E5"]) == 0
    out = capsys.readouterr().out
    assert "d_O = 24" in out
    assert "r = 24" in out
    assert "dimension E5: 29376 = 29376 (ok)" in out


def test_run_json_and_out_dir(tmp_path, capsys):
    assert main(["run", "--case", "su3-diagonal-3", "--json", "--out-dir", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    assert printed == (tmp_path / "report.json").read_text()
    assert "verify" in json.loads((tmp_path / "timings.json").read_text())
    assert json.loads(printed)["stages"]["graphs"]["names"] == ["A3"]


def test_stage_subcommands(capsys):
    assert main(["solve-toric", "--case", "su3-E5", "--json"]) == 0
    assert list(json.loads(capsys.readouterr().out)["stages"]) == ["toric"]
    assert main(["generators", "--case", "su3-E5-conj"]) == 0
    assert "left blocks [12, 12]" in capsys.readouterr().out
    assert main(["ocneanu", "--case", "su3-E5"]) == 0
    assert "commutative = True" in capsys.readouterr().out
    assert main(["graphs", "--case", "su3-E5-conj"]) == 0
    assert "candidate E5/3" in capsys.readouterr().out
    assert main(["verify", "--case", "su3-E5-conj", "--stage", "3"]) == 0


def test_fusion_subcommand(capsys):
    assert main(["fusion", "--algebra", "su3", "--level", "5"]) == 0
    assert capsys.readouterr().out == "su3 level 5: 21 weights, Verlinde agrees = True\n"
    assert main(["fusion", "--case", "su3-E9", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["alcove"] == 55 and data["verlinde_agrees"] and data["commutative"]


def test_export_dot_cli(tmp_path, capsys):
    assert main(["export-dot", "--case", "su3-E5", "--out-dir", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["graph-E5.dot", "ocneanu.dot"]


def test_unknown_case_is_inconsistent(capsys):
    assert main(["run", "--case", "su3-E7"]) == 3
    assert "unknown built-in" in capsys.readouterr().err


def test_missing_file_is_io_error(tmp_path):
    assert main(["run", "--input", str(tmp_path / "absent.json")]) == 4


def test_invalid_json_is_io_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["run", "--input", str(p)]) == 4


def test_bad_matrix_is_inconsistent(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"algebra": "su3", "level": 1, "matrix": [[2, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    assert main(["run", "--input", str(p)]) == 3


def test_underdetermined_input_is_ambiguous(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"algebra": "su3", "level": 1, "matrix": [[1, 1, 1], [0, 1, 1], [0, 0, 0]]}))
    assert main(["run", "--input", str(p)]) == 2


def test_bad_stage_is_inconsistent():
    assert main(["run", "--case", "su3-E5", "--stage", "closure"]) == 3


def test_export_dot_needs_graphs(tmp_path):
    assert main(["export-dot", "--case", "su3-E5", "--stage", "toric", "--out-dir", str(tmp_path)]) == 3


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--case", "su3-diagonal-1", "--out-dir", str(blocker / "sub")]) == 4


def test_case_and_input_are_exclusive():
    with pytest.raises(SystemExit):
        main(["run", "--case", "su3-E5", "--input", "x.json"])


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "modsplit.cli", "fusion", "--algebra", "su2", "--level", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == "su2 level 3: 4 weights, Verlinde agrees = True\n"
