"""Level-k alcoves of su(2) and su(3) and their fusion matrices.

Weights are tuples of Dynkin labels, ``(l,)`` for su(2) and ``(l1, l2)`` for
su(3).  ``(N_lam)[mu, nu]`` is the multiplicity of ``nu`` in ``lam x mu``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .linalg import identity, is_nonneg, matmul, zeros

Weight = tuple[int, ...]

ALGEBRAS = ("su2", "su3")
ORACLE_TOLERANCE = 1e-6


class FusionError(ValueError):
    pass


def _check_algebra(algebra: str) -> None:
    if algebra not in ALGEBRAS:
        raise FusionError(f"unsupported algebra {algebra!r}; expected one of {ALGEBRAS}")


def enumerate_weights(algebra: str, level: int) -> list[Weight]:
    """Integrable weights at ``level`` in lexicographic order (trivial weight first)."""
    _check_algebra(algebra)
    if level < 0:
        raise FusionError("level must be non-negative")
    if algebra == "su2":
        return [(l,) for l in range(level + 1)]
    return [(a, b) for a in range(level + 1) for b in range(level + 1 - a)]


def alcove_size(algebra: str, level: int) -> int:
    _check_algebra(algebra)
    return level + 1 if algebra == "su2" else (level + 1) * (level + 2) // 2


def conjugate_weight(w: Weight) -> Weight:
    """Charge conjugation: swaps Dynkin labels for su(3), trivial for su(2)."""
    return (w[1], w[0]) if len(w) == 2 else tuple(w)


def fundamental_weights(algebra: str) -> list[Weight]:
    _check_algebra(algebra)
    return [(1,)] if algebra == "su2" else [(1, 0), (0, 1)]


def triality(w: Weight) -> int:
    """N-ality of a weight: ``l1 + 2 l2 mod 3`` (su3), ``l mod 2`` (su2)."""
    return (w[0] + 2 * w[1]) % 3 if len(w) == 2 else w[0] % 2


@dataclass(frozen=True)
class FusionRing:
    algebra: str
    level: int
    weights: list[Weight] = field(repr=False)
    index: dict[Weight, int] = field(repr=False)
    matrices: list[np.ndarray] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def idx(self, w) -> int:
        try:
            return self.index[tuple(w)]
        except KeyError:
            raise FusionError(f"weight {tuple(w)} is outside the {self.algebra} level-{self.level} alcove") from None

    def N(self, w) -> np.ndarray:
        return self.matrices[self.idx(w)]

    def conj(self, w) -> Weight:
        return conjugate_weight(tuple(w))

    @cached_property
    def conj_index(self) -> list[int]:
        return [self.idx(conjugate_weight(w)) for w in self.weights]

    @property
    def fundamentals(self) -> list[Weight]:
        return fundamental_weights(self.algebra) if self.level > 0 else []

    def coefficient(self, lam, mu, nu) -> int:
        return int(self.N(lam)[self.idx(mu), self.idx(nu)])

    def recursion(self, generator: np.ndarray, unit: np.ndarray | None = None) -> list[np.ndarray]:
        """Run the truncated recursion seeded with ``generator`` in place of N_f.

        Works for any seed: fusion matrices themselves, annular matrices of
        a candidate graph or the left/right double fusion generators.  Raises
        :class:`NegativeEntry` when a matrix with a negative entry appears.
        """
        return truncated_recursion(self.algebra, self.weights, generator, unit)


class NegativeEntry(FusionError):
    def __init__(self, weight: Weight, matrix: np.ndarray):
        super().__init__(f"negative entry in matrix for weight {weight}")
        self.weight = weight
        self.matrix = matrix


def truncated_recursion(algebra: str, weights: list[Weight], gen: np.ndarray,
                        unit: np.ndarray | None = None) -> list[np.ndarray]:
    n = gen.shape[0]
    one = identity(n) if unit is None else unit
    out: dict[Weight, np.ndarray] = {}

    def get(w: Weight) -> np.ndarray:
        if any(c < 0 for c in w):
            return zeros(n)
        return out[w]

    def store(w: Weight, m: np.ndarray) -> None:
        if not is_nonneg(m):
            raise NegativeEntry(w, m)
        out[w] = m

    if algebra == "su2":
        for (l,) in sorted(weights):
            if l == 0:
                store((0,), one)
            elif l == 1:
                store((1,), gen)
            else:
                store((l,), matmul(gen, out[(l - 1,)]) - get((l - 2,)))
        return [out[w] for w in weights]

    for level in range(max(sum(w) for w in weights) + 1):
        for lam in range(level, 0, -1):
            mu = level - lam
            if (lam, mu) == (1, 0):
                m = gen
            elif mu != 0:
                m = matmul(gen, get((lam - 1, mu))) - get((lam - 1, mu - 1)) - get((lam - 2, mu + 1))
            else:
                m = matmul(gen, get((lam - 1, 0))) - get((lam - 2, 1))
            store((lam, mu), m)
        if level == 0:
            store((0, 0), one)
        else:
            store((0, level), out[(level, 0)].T.copy())
    return [out[w] for w in weights]


def fundamental_matrix(algebra: str, level: int, weights: list[Weight] | None = None) -> np.ndarray:
    """N_f as the alcove adjacency: mu -> mu + (1,0), mu + (-1,1), mu + (0,-1)."""
    weights = weights or enumerate_weights(algebra, level)
    index = {w: i for i, w in enumerate(weights)}
    n = len(weights)
    m = zeros(n)
    steps = [(1,), (-1,)] if algebra == "su2" else [(1, 0), (-1, 1), (0, -1)]
    for w, i in index.items():
        for s in steps:
            t = tuple(a + b for a, b in zip(w, s))
            j = index.get(t)
            if j is not None:
                m[i, j] += 1
    return m


def build_fusion_ring(algebra: str, level: int) -> FusionRing:
    weights = enumerate_weights(algebra, level)
    index = {w: i for i, w in enumerate(weights)}
    if level == 0:
        mats = [identity(1)]
    else:
        gen = fundamental_matrix(algebra, level, weights)
        mats = truncated_recursion(algebra, weights, gen)
    for m in mats:
        m.setflags(write=False)
    return FusionRing(algebra, level, weights, index, mats)


# --- independent numeric oracle -------------------------------------------

def _weyl_orbit_su3(v: tuple[int, int]) -> list[tuple[tuple[int, int], int]]:
    def s1(x):
        return (-x[0], x[0] + x[1])

    def s2(x):
        return (x[0] + x[1], -x[1])

    words = [(), (1,), (2,), (1, 2), (2, 1), (1, 2, 1)]
    out = []
    for word in words:
        x = v
        for s in reversed(word):
            x = s1(x) if s == 1 else s2(x)
        out.append((x, (-1) ** len(word)))
    return out


def _form_su3(x, y) -> float:
    return (2 * x[0] * y[0] + x[0] * y[1] + x[1] * y[0] + 2 * x[1] * y[1]) / 3


def modular_s_matrix(algebra: str, level: int) -> np.ndarray:
    """Numeric modular S matrix, normalised so ``S[0, :]`` is real positive."""
    weights = enumerate_weights(algebra, level)
    n = len(weights)
    if algebra == "su2":
        h = level + 2
        s = np.array([[math.sqrt(2 / h) * math.sin(math.pi * (a[0] + 1) * (b[0] + 1) / h)
                       for b in weights] for a in weights], dtype=complex)
        return s
    h = level + 3
    s = np.zeros((n, n), dtype=complex)
    for i, a in enumerate(weights):
        orbit = _weyl_orbit_su3((a[0] + 1, a[1] + 1))
        for j, b in enumerate(weights):
            mr = (b[0] + 1, b[1] + 1)
            s[i, j] = sum(sign * cmath.exp(-2j * math.pi * _form_su3(x, mr) / h) for x, sign in orbit)
    scale = 1 / math.sqrt(abs((s @ s.conj().T)[0, 0]))
    s *= scale * abs(s[0, 0]) / s[0, 0]
    return s


def verlinde_table(algebra: str, level: int) -> np.ndarray:
    """All fusion coefficients ``T[l, m, n]`` from the Verlinde formula, rounded.

    Raises :class:`FusionError` when any value is further than the oracle
    tolerance from an integer.
    """
    s = modular_s_matrix(algebra, level)
    raw = np.einsum("ls,ms,ns,s->lmn", s, s, s.conj(), 1 / s[0])
    rounded = np.rint(raw.real)
    resid = max(float(np.abs(raw.imag).max()), float(np.abs(raw.real - rounded).max()))
    if resid > ORACLE_TOLERANCE:
        raise FusionError(f"Verlinde oracle residue {resid:.3g} exceeds {ORACLE_TOLERANCE}")
    return rounded.astype(np.int64)


def verlinde_oracle(ring: FusionRing, lam, mu, nu) -> int:
    s = modular_s_matrix(ring.algebra, ring.level)
    i, j, l = ring.idx(lam), ring.idx(mu), ring.idx(nu)
    raw = complex(np.sum(s[i] * s[j] * s[l].conj() / s[0]))
    r = round(raw.real)
    if abs(raw.real - r) > ORACLE_TOLERANCE or abs(raw.imag) > ORACLE_TOLERANCE:
        raise FusionError(f"Verlinde oracle residue exceeds {ORACLE_TOLERANCE} at {(lam, mu, nu)}")
    return int(r)
