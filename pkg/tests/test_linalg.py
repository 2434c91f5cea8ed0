from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from modsplit.linalg import (
    ExactSpan, IntegerOverflow, RowRank, as_int_matrix, bareiss_rank, exact_matmul, matmul,
    permutation_matrix, row_space_rank, try_divide,
)


def test_as_int_matrix_checks():
    assert as_int_matrix([[1, 2], [3, 4]]).dtype == np.int64
    with pytest.raises(TypeError):
        as_int_matrix([[1.5, 2.0]])
    with pytest.raises(ValueError):
        as_int_matrix([1, 2, 3])
    with pytest.raises(IntegerOverflow):
        as_int_matrix(np.array([[2**63 + 5]], dtype=object))


def test_matmul_overflow_guard():
    big = np.array([[2**40]], dtype=np.int64)
    with pytest.raises(IntegerOverflow):
        matmul(big, big)
    with pytest.raises(IntegerOverflow):
        exact_matmul(big, big)


def test_exact_matmul_agrees_with_integer_product():
    rng = np.random.default_rng(0)
    a = rng.integers(-50, 50, size=(3, 7, 7))
    b = rng.integers(-50, 50, size=(7, 7))
    assert np.array_equal(exact_matmul(a, b), a @ b)
    # large but still int64-safe entries take the integer route
    c = np.full((2, 2), 2**28, dtype=np.int64)
    assert np.array_equal(exact_matmul(c, c), c @ c)


def test_try_divide_and_permutation():
    assert try_divide(np.array([[2, 4]]), 2).tolist() == [[1, 2]]
    assert try_divide(np.array([[2, 3]]), 2) is None
    P = permutation_matrix([2, 0, 1])
    assert P[0, 2] == 1 and P[1, 0] == 1 and P.sum() == 3


def test_rank_agreement():
    rng = np.random.default_rng(1)
    for _ in range(20):
        base = rng.integers(-3, 4, size=(3, 6))
        rows = rng.integers(-2, 3, size=(5, 3)) @ base
        expected = np.linalg.matrix_rank(rows.astype(float))
        assert bareiss_rank(rows.tolist()) == expected
        assert row_space_rank(list(rows)) == expected


def test_rowrank_membership():
    acc = RowRank(3)
    assert acc.add(np.array([1, 2, 3]))
    assert not acc.add(np.array([2, 4, 6]))
    assert acc.contains(np.array([-1, -2, -3]))
    assert not acc.contains(np.array([0, 0, 1]))
    assert acc.rank == 1


def test_exact_span_coordinates():
    span = ExactSpan(4)
    assert span.add(np.array([1, 1, 0, 0]))
    assert span.add(np.array([0, 1, 1, 0]))
    assert not span.add(np.array([1, 2, 1, 0]))
    assert span.integer_coordinates(np.array([2, 5, 3, 0])) == [2, 3]
    assert span.coordinates(np.array([1, 1, 1, 1])) is None
    half = ExactSpan(2)
    half.add(np.array([2, 0]))
    half.add(np.array([0, 1]))
    assert half.coordinates(np.array([1, 1])) == [Fraction(1, 2), Fraction(1)]
    assert half.integer_coordinates(np.array([1, 1])) is None
