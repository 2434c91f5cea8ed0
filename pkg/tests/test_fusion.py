from __future__ import annotations

import numpy as np
import pytest

from modsplit.fusion import (
    FusionError, NegativeEntry, alcove_size, build_fusion_ring, conjugate_weight, enumerate_weights,
    fundamental_matrix, triality, verlinde_oracle, verlinde_table,
)


@pytest.mark.parametrize("algebra,level,size", [("su3", 5, 21), ("su3", 9, 55), ("su3", 0, 1),
                                                ("su2", 10, 11), ("su3", 1, 3)])
def test_alcove_size(algebra, level, size):
    assert alcove_size(algebra, level) == size
    assert len(enumerate_weights(algebra, level)) == size


def test_weights_start_with_vacuum_and_are_unique():
    ws = enumerate_weights("su3", 4)
    assert ws[0] == (0, 0)
    assert len(set(ws)) == len(ws)
    assert all(a + b <= 4 and a >= 0 and b >= 0 for a, b in ws)


def test_unknown_algebra_rejected():
    with pytest.raises(FusionError):
        enumerate_weights("g2", 3)


def test_conjugation_and_triality():
    assert conjugate_weight((2, 1)) == (1, 2)
    assert triality((1, 0)) == 1
    assert triality((0, 1)) == 2
    assert triality((2, 2)) == 0


def test_weight_outside_alcove():
    ring = build_fusion_ring("su3", 2)
    with pytest.raises(FusionError):
        ring.idx((2, 1))


def test_fundamental_matrix_is_generator():
    ring = build_fusion_ring("su3", 3)
    assert np.array_equal(ring.N((1, 0)), fundamental_matrix("su3", 3))
    assert np.array_equal(ring.N((0, 1)), ring.N((1, 0)).T)
    assert np.array_equal(ring.N((0, 0)), np.eye(ring.dim, dtype=np.int64))


def test_su3_level_one_is_z3():
    ring = build_fusion_ring("su3", 1)
    # (1,0) x (1,0) = (0,1)
    assert ring.coefficient((1, 0), (1, 0), (0, 1)) == 1
    assert ring.coefficient((1, 0), (0, 1), (0, 0)) == 1


def test_su2_level_two_ising_rule():
    ring = build_fusion_ring("su2", 2)
    assert ring.coefficient((1,), (1,), (0,)) == 1
    assert ring.coefficient((1,), (1,), (2,)) == 1
    assert ring.coefficient((2,), (2,), (0,)) == 1


@pytest.mark.parametrize("algebra,level", [("su3", 4), ("su2", 7)])
def test_verlinde_table_matches_recursion(algebra, level):
    ring = build_fusion_ring(algebra, level)
    assert np.array_equal(np.stack(ring.matrices), verlinde_table(algebra, level))


def test_single_oracle_coefficient():
    ring = build_fusion_ring("su3", 3)
    for lam, mu, nu in [((1, 0), (1, 0), (2, 0)), ((1, 1), (1, 1), (1, 1)), ((3, 0), (0, 3), (0, 0))]:
        assert verlinde_oracle(ring, lam, mu, nu) == ring.coefficient(lam, mu, nu)


def test_recursion_rejects_negative_seed():
    ring = build_fusion_ring("su3", 3)
    bad = np.zeros((2, 2), dtype=np.int64)
    bad[0, 1] = 1
    with pytest.raises(NegativeEntry) as info:
        ring.recursion(bad)
    assert info.value.matrix.min() < 0


def test_recursion_with_own_generator_reproduces_ring():
    ring = build_fusion_ring("su2", 5)
    again = ring.recursion(ring.N((1,)))
    assert all(np.array_equal(a, b) for a, b in zip(again, ring.matrices))


def test_fusion_matrices_read_only():
    ring = build_fusion_ring("su3", 2)
    with pytest.raises(ValueError):
        ring.matrices[0][0, 0] = 5
