from __future__ import annotations

import pytest

from _checks import (
    compatibility_ok, diagonal_failures, double_fusion_failures, fusion_ring_failures, representation_failures,
)

CASES = ["su3-E5", "su3-E5-conj", "su3-E9", "su3-diagonal-4", "su2-diagonal-7"]


@pytest.mark.parametrize("algebra,level", [(a, k) for a in ("su3", "su2") for k in range(1, 10)])
def test_fusion_ring_commutative_and_rigid(algebra, level):
    assert fusion_ring_failures(algebra, level) == []


@pytest.mark.parametrize("case", CASES)
def test_double_fusion_identity(pipeline, case):
    assert double_fusion_failures(pipeline(case)[1]) == []


@pytest.mark.parametrize("case", CASES)
def test_compatibility_identities(pipeline, case):
    assert compatibility_ok(pipeline(case)[1])


@pytest.mark.parametrize("case", CASES)
def test_every_dual_family_is_a_representation(pipeline, case):
    ctx = pipeline(case)[1]
    assert ctx.duals
    for name, dual in ctx.duals.items():
        assert dual.matrices is not None, name
        assert dual.matrices.min() >= 0
        assert representation_failures(ctx.algebra.matrices, dual.matrices) == [], name


@pytest.mark.parametrize("case", [f"su3-diagonal-{k}" for k in range(1, 6)] + [f"su2-diagonal-{k}" for k in range(1, 11)])
def test_diagonal_invariant_sanity(pipeline, case):
    assert diagonal_failures(pipeline(case)[1]) == []
