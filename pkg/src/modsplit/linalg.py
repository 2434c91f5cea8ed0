"""Exact dense integer matrix helpers.

Matrices are plain ``numpy`` arrays of dtype ``int64``.  Products go through
:func:`matmul`, which refuses to run when the result could leave the int64
range, so silent wrap-around never reaches a caller.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

INT = np.int64
_LIMIT = 2**62


class IntegerOverflow(ArithmeticError):
    """An integer result would not fit in 64 bits."""


def as_int_matrix(data) -> np.ndarray:
    m = np.asarray(data)
    if m.dtype == object:
        if any(abs(int(v)) >= _LIMIT for v in m.flat):
            raise IntegerOverflow("entry outside int64 range")
        m = m.astype(INT)
    elif not np.issubdtype(m.dtype, np.integer):
        raise TypeError(f"expected an integer matrix, got dtype {m.dtype}")
    m = m.astype(INT, copy=False)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def _maxabs(m: np.ndarray) -> int:
    return int(np.abs(m).max()) if m.size else 0


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Checked integer matrix product."""
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    if _maxabs(a) * _maxabs(b) * max(a.shape[-1], 1) >= _LIMIT:
        raise IntegerOverflow("matrix product may overflow int64")
    return a @ b


_FLOAT_EXACT = 2**52


def exact_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Integer product computed through float64 BLAS when that is provably exact.

    Works on stacks of matrices too.  Falls back to :func:`matmul` semantics
    (checked int64) when entries are too large for the float route.
    """
    bound = _maxabs(a) * _maxabs(b) * max(a.shape[-1], 1)
    if bound < _FLOAT_EXACT:
        return np.rint(np.asarray(a, dtype=float) @ np.asarray(b, dtype=float)).astype(INT)
    if bound >= _LIMIT:
        raise IntegerOverflow("matrix product may overflow int64")
    return np.asarray(a, dtype=INT) @ np.asarray(b, dtype=INT)


def mat_chain(*ms: np.ndarray) -> np.ndarray:
    out = ms[0]
    for m in ms[1:]:
        out = matmul(out, m)
    return out


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=INT)


def zeros(n: int, m: int | None = None) -> np.ndarray:
    return np.zeros((n, n if m is None else m), dtype=INT)


def flatten(m: np.ndarray) -> np.ndarray:
    """Row-major flattening: ``[[a, b], [c, d]] -> (a, b, c, d)``."""
    return np.asarray(m).reshape(-1)


def unflatten(row: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(row).reshape(rows, cols)


def try_divide(m: np.ndarray, d: int) -> np.ndarray | None:
    """``m / d`` when every entry is divisible by ``d``, otherwise ``None``."""
    if d < 1:
        raise ValueError("divisor must be positive")
    if np.any(m % d):
        return None
    return m // d


def is_nonneg(m: np.ndarray) -> bool:
    return bool(np.all(np.asarray(m) >= 0))


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix with ``P[i, perm[i]] = 1``."""
    n = len(perm)
    p = zeros(n)
    p[np.arange(n), list(perm)] = 1
    return p


class RowRank:
    """Incremental exact rank of a stream of integer rows.

    Each incoming row is reduced against the pivot rows collected so far with
    fraction-free updates (``r <- p[c] * r - r[c] * p``, then divided by the
    gcd of its entries).  A row that survives the reduction becomes a new pivot,
    so memory and work stay proportional to the rank, not the row count.
    """

    def __init__(self, length: int):
        self.length = length
        self._pivots: list[tuple[int, np.ndarray]] = []

    @property
    def rank(self) -> int:
        return len(self._pivots)

    def _reduce(self, row: np.ndarray) -> np.ndarray:
        r = np.array(row, dtype=INT)
        if r.shape != (self.length,):
            raise ValueError(f"row has shape {r.shape}, expected ({self.length},)")
        for col, piv in self._pivots:
            f = int(r[col])
            if f == 0:
                continue
            p = int(piv[col])
            g = gcd(p, f)
            a, b = p // g, f // g
            if abs(a) * _maxabs(r) + abs(b) * _maxabs(piv) >= _LIMIT:
                raise IntegerOverflow("row reduction may overflow int64")
            r = a * r - b * piv
            nz = r[r != 0]
            if nz.size:
                h = int(np.gcd.reduce(np.abs(nz)))
                if h > 1:
                    r //= h
        return r

    def add(self, row: np.ndarray) -> bool:
        """Feed one row; return True when it increased the rank."""
        r = self._reduce(row)
        nz = np.flatnonzero(r)
        if nz.size == 0:
            return False
        self._pivots.append((int(nz[0]), r))
        return True

    def contains(self, row: np.ndarray) -> bool:
        return not np.any(self._reduce(row))


def row_space_rank(rows: Iterable[np.ndarray]) -> int:
    rows = [flatten(np.asarray(r)) for r in rows]
    if not rows:
        return 0
    acc = RowRank(len(rows[0]))
    for r in rows:
        acc.add(r)
    return acc.rank


def bareiss_rank(matrix: Sequence[Sequence[int]]) -> int:
    """Rank by one-shot Bareiss elimination on Python integers."""
    m = [list(map(int, row)) for row in matrix]
    if not m:
        return 0
    rows, cols = len(m), len(m[0])
    rank, prev = 0, 1
    for c in range(cols):
        piv = next((i for i in range(rank, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][c]
        for i in range(rank + 1, rows):
            for j in range(c + 1, cols):
                m[i][j] = (p * m[i][j] - m[i][c] * m[rank][j]) // prev
            m[i][c] = 0
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


def _invert_fraction(a: list[list[Fraction]]) -> list[list[Fraction]]:
    """Gauss-Jordan inverse of a non-singular rational matrix."""
    n = len(a)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        piv = next(i for i in range(c, n) if aug[i][c] != 0)
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y if y else x for x, y in zip(aug[i], aug[c])]
    return [row[n:] for row in aug]


class ExactSpan:
    """Exact coordinates of integer vectors over a linearly independent set.

    Vectors are added one at a time (dependent ones are rejected).  A square
    sub-system on pivot columns is inverted exactly and cached, so expressing
    a query vector costs one small rational mat-vec plus an exact full-length
    check.
    """

    def __init__(self, length: int):
        self.length = length
        self.vectors: list[np.ndarray] = []
        self._rank = RowRank(length)
        self._cols: list[int] = []
        self._inv: list[list[Fraction]] | None = None

    def __len__(self) -> int:
        return len(self.vectors)

    def add(self, vec: np.ndarray) -> bool:
        v = flatten(np.asarray(vec, dtype=INT))
        if not self._rank.add(v):
            return False
        self.vectors.append(v)
        self._cols = [c for c, _ in self._rank._pivots]
        self._inv = None
        return True

    def _inverse(self) -> list[list[Fraction]]:
        if self._inv is None:
            n = len(self.vectors)
            # columns of the square system: sub[i][j] = vectors[j][cols[i]]
            sub = [[Fraction(int(self.vectors[j][c])) for j in range(n)] for c in self._cols]
            self._inv = _invert_fraction(sub)
        return self._inv

    def coordinates(self, vec: np.ndarray) -> list[Fraction] | None:
        """Exact coefficients ``c`` with ``sum c_i vectors[i] == vec``, else None."""
        v = flatten(np.asarray(vec, dtype=INT))
        if not self.vectors:
            return [] if not np.any(v) else None
        inv = self._inverse()
        rhs = [int(v[c]) for c in self._cols]
        coef = [sum((row[j] * rhs[j] for j in range(len(rhs)) if rhs[j]), Fraction(0)) for row in inv]
        if any(c.denominator != 1 for c in coef):
            full = [sum(c * int(vv[i]) for c, vv in zip(coef, self.vectors)) for i in range(self.length)]
            return coef if all(f == int(x) for f, x in zip(full, v)) else None
        ints = np.array([int(c) for c in coef], dtype=INT)
        recon = np.zeros(self.length, dtype=INT)
        for c, vv in zip(ints, self.vectors):
            if c:
                recon += c * vv
        return coef if np.array_equal(recon, v) else None

    def integer_coordinates(self, vec: np.ndarray) -> list[int] | None:
        coef = self.coordinates(vec)
        if coef is None or any(c.denominator != 1 for c in coef):
            return None
        return [int(c) for c in coef]
