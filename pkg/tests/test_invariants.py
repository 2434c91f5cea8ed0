from __future__ import annotations

import json

import numpy as np
import pytest

from modsplit.fusion import build_fusion_ring
from modsplit.invariants import (
    Block, InvariantError, builtin, diagonal, from_blocks, from_json, invariants_dims, load, to_json,
)


@pytest.mark.parametrize("case,d_G,d_O", [("su3-E5", 12, 24), ("su3-E5-conj", 4, 24),
                                          ("su3-E9", 12, 72), ("su3-diagonal-3", 10, 10)])
def test_builtin_dimensions(case, d_G, d_O):
    assert invariants_dims(builtin(case)) == (d_G, d_O)


def test_invariants_commute_with_conjugation_structure():
    for case in ("su3-E5", "su3-E5-conj", "su3-E9"):
        inv = builtin(case)
        M = inv.matrix
        assert M[0, 0] == 1 and M.min() >= 0
        # M commutes with charge conjugation
        c = inv.ring.conj_index
        Cm = np.eye(inv.ring.dim, dtype=np.int64)[c]
        assert np.array_equal(Cm @ M @ Cm, M)


def test_conjugate_invariant_is_conjugation_times_e5():
    e5 = builtin("su3-E5")
    Cm = np.eye(e5.ring.dim, dtype=np.int64)[e5.ring.conj_index]
    assert np.array_equal(builtin("su3-E5-conj").matrix, Cm @ e5.matrix)


def test_diagonal_is_identity():
    ring = build_fusion_ring("su2", 4)
    assert np.array_equal(diagonal(ring).matrix, np.eye(5, dtype=np.int64))


def test_unknown_builtin():
    with pytest.raises(InvariantError):
        builtin("su3-E7")


def test_blocks_outside_alcove_rejected():
    ring = build_fusion_ring("su3", 2)
    with pytest.raises(InvariantError):
        from_blocks(ring, [Block.diagonal([(0, 0), (3, 0)])])


def test_vacuum_multiplicity_enforced():
    ring = build_fusion_ring("su3", 1)
    with pytest.raises(InvariantError):
        from_blocks(ring, [Block.diagonal([(0, 0)], multiplicity=2)])


def test_json_round_trip(tmp_path):
    inv = builtin("su3-E5-conj")
    data = to_json(inv)
    back = from_json(data)
    assert np.array_equal(back.matrix, inv.matrix)
    path = tmp_path / "conj.json"
    path.write_text(json.dumps({"algebra": "su3", "level": 5,
                                "blocks": [{"left": [[0, 0], [2, 2]]}, {"left": [[3, 0], [0, 3]]},
                                           {"left": [[0, 2], [3, 2]], "right": [[2, 0], [2, 3]], "hc": True},
                                           {"left": [[2, 1], [0, 5]], "right": [[1, 2], [5, 0]], "hc": True}]}))
    assert np.array_equal(load(path).matrix, inv.matrix)
    assert load(path).name == "conj"


def test_json_errors():
    with pytest.raises(InvariantError):
        from_json({"level": 3, "matrix": []})
    with pytest.raises(InvariantError):
        from_json({"algebra": "su3", "level": 1})
    with pytest.raises(InvariantError):
        from_json({"algebra": "su3", "level": 1, "matrix": [[1, 0], [0, 1]]})


def test_transposed():
    inv = builtin("su3-E5-conj")
    assert np.array_equal(inv.transposed().matrix, inv.matrix.T)
