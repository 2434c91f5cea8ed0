from __future__ import annotations

import json

import pytest

from modsplit.invariants import builtin
from modsplit.pipeline import REPORT_SCHEMA, STAGES, candidate_dot, export_dot, run, stage_index, worker_count


def test_stage_index():
    assert stage_index("toric") == 0
    assert stage_index("5") == 4
    assert stage_index(3) == 2
    with pytest.raises(ValueError):
        stage_index("closure")
    with pytest.raises(ValueError):
        stage_index(6)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("MODSPLIT_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("MODSPLIT_THREADS", "0")
    assert worker_count() == 1
    monkeypatch.setenv("MODSPLIT_THREADS", "many")
    assert worker_count() >= 1


def test_partial_run_stops_at_stage():
    report, ctx = run(builtin("su3-E5"), stage="toric")
    assert list(report.stages) == ["toric"]
    assert ctx.generators is None
    toric = report.stages["toric"]
    assert toric["d_O"] == 24 and toric["r"] == 24 and toric["profile"] == {1: 24}
    assert toric["splitting"] == {"ok": True, "pairs": 441, "failures": []}


def test_report_serialization():
    report, _ = run(builtin("su3-diagonal-3"))
    data = json.loads(report.dumps())
    assert data["schema"] == REPORT_SCHEMA
    assert set(data) == {"schema", "input", "stages"}
    assert list(data["stages"]) == sorted(STAGES)
    assert set(json.loads(report.timings_json())) == set(STAGES)
    assert data["stages"]["graphs"]["names"] == ["A3"]
    assert data["stages"]["verify"]["dimension_sums"] == {"A3": 2920}


def test_diagonal_report_matches_fusion_ring():
    report, ctx = run(builtin("su3-diagonal-3"), stage="ocneanu")
    ring = ctx.invariant.ring
    got = sorted(e.matrix.tobytes() for e in ctx.ledger.entries)
    assert got == sorted(m.tobytes() for m in ring.matrices)
    assert report.stages["ocneanu"]["commutative"] is True


def test_thread_count_does_not_change_report():
    one, _ = run(builtin("su3-E5-conj"), workers=1)
    two, _ = run(builtin("su3-E5-conj"), workers=2)
    assert one.dumps() == two.dumps()


def test_transposed_convention_of_symmetric_invariant():
    a, _ = run(builtin("su3-E5"), stage="ocneanu")
    b, _ = run(builtin("su3-E5"), stage="ocneanu", convention="transposed")
    assert a.stages == b.stages
    assert b.input["convention"] == "transposed"
    with pytest.raises(ValueError):
        run(builtin("su3-E5"), convention="mirror")


def test_export_dot(tmp_path, e5):
    written = export_dot(e5, str(tmp_path))
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["graph-E5.dot", "ocneanu.dot"]
    assert len(written) == 2
    oc = (tmp_path / "ocneanu.dot").read_text()
    assert oc.count("[label=") == 24
    assert "style=dashed" in oc
    assert oc.startswith("// convention: paper\n")
    g = (tmp_path / "graph-E5.dot").read_text()
    assert g.count("[label=") == 12
    assert g == "// convention: paper\n" + candidate_dot(e5.candidates[0])


def test_export_dot_tags_transposed_convention(tmp_path):
    _, ctx = run(builtin("su3-diagonal-2"), stage="graphs", convention="transposed")
    export_dot(ctx, str(tmp_path))
    for path in tmp_path.iterdir():
        assert path.read_text().startswith("// convention: transposed\n")


def test_export_dot_fixture_name_is_file_safe(tmp_path, e5_conj):
    export_dot(e5_conj, str(tmp_path))
    assert (tmp_path / "graph-E5_3.dot").exists()


def test_export_dot_without_candidates_writes_nothing(tmp_path):
    _, ctx = run(builtin("su3-diagonal-2"), stage="graphs")
    ctx.candidates = []
    out = tmp_path / "dots"
    with pytest.raises(ValueError):
        export_dot(ctx, str(out))
    assert not out.exists()


def test_fusion_graph_dot_has_alcove_vertices(tmp_path):
    _, ctx = run(builtin("su3-diagonal-5"), stage="graphs")
    export_dot(ctx, str(tmp_path))
    assert (tmp_path / "graph-A5.dot").read_text().count("[label=") == 21
