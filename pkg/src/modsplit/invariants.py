"""Modular invariants: construction from partition-function blocks and built-in cases."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fusion import FusionError, FusionRing, build_fusion_ring
from .linalg import as_int_matrix, matmul, zeros


class InvariantError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    """``multiplicity * (sum_left chi)(sum_right chi-bar)``, plus its conjugate if ``hc``."""

    left: tuple
    right: tuple
    multiplicity: int = 1
    hc: bool = False

    @classmethod
    def diagonal(cls, weights, multiplicity: int = 1) -> "Block":
        w = tuple(tuple(x) for x in weights)
        return cls(w, w, multiplicity)


@dataclass(frozen=True)
class ModularInvariant:
    ring: FusionRing
    matrix: np.ndarray
    name: str = "custom"

    @property
    def d_G(self) -> int:
        return int(np.trace(self.matrix))

    @property
    def d_O(self) -> int:
        return int(np.trace(matmul(self.matrix, self.matrix.T)))

    def transposed(self) -> "ModularInvariant":
        return ModularInvariant(self.ring, self.matrix.T.copy(), self.name + "^T")


def invariants_dims(inv: ModularInvariant) -> tuple[int, int]:
    return inv.d_G, inv.d_O


def _check(ring: FusionRing, m: np.ndarray) -> None:
    if m.shape != (ring.dim, ring.dim):
        raise InvariantError(f"matrix shape {m.shape} does not match alcove size {ring.dim}")
    if np.any(m < 0):
        raise InvariantError("modular invariant has a negative entry")
    if m[0, 0] != 1:
        raise InvariantError("vacuum must be coupled exactly once (M[0,0] == 1)")


def from_blocks(ring: FusionRing, blocks, name: str = "custom") -> ModularInvariant:
    m = zeros(ring.dim)
    for b in blocks:
        try:
            left = np.zeros(ring.dim, dtype=np.int64)
            for w in b.left:
                left[ring.idx(w)] += 1
            right = np.zeros(ring.dim, dtype=np.int64)
            for w in b.right:
                right[ring.idx(w)] += 1
        except FusionError as exc:
            raise InvariantError(str(exc)) from None
        term = b.multiplicity * np.outer(left, right)
        m += term
        if b.hc:
            m += term.T
    _check(ring, m)
    return ModularInvariant(ring, m, name)


def from_matrix(ring: FusionRing, matrix, name: str = "custom") -> ModularInvariant:
    m = as_int_matrix(matrix).copy()
    _check(ring, m)
    return ModularInvariant(ring, m, name)


def _w(*ws: str) -> tuple:
    return tuple((int(s[0]), int(s[1])) for s in ws)


E5_BLOCKS = [
    Block.diagonal(_w("00", "22")),
    Block.diagonal(_w("02", "32")),
    Block.diagonal(_w("20", "23")),
    Block.diagonal(_w("21", "05")),
    Block.diagonal(_w("30", "03")),
    Block.diagonal(_w("12", "50")),
]

E5_CONJ_BLOCKS = [
    Block.diagonal(_w("00", "22")),
    Block.diagonal(_w("30", "03")),
    Block(_w("02", "32"), _w("20", "23"), 1, hc=True),
    Block(_w("21", "05"), _w("12", "50"), 1, hc=True),
]

E9_BLOCKS = [
    Block.diagonal(_w("00", "09", "90", "14", "41", "44")),
    Block.diagonal(_w("22", "25", "52"), multiplicity=2),
]

_NAMED = {
    "su3-E5": ("su3", 5, E5_BLOCKS),
    "su3-E5-conj": ("su3", 5, E5_CONJ_BLOCKS),
    "su3-E9": ("su3", 9, E9_BLOCKS),
}
_DIAGONAL = re.compile(r"^(su[23])-diagonal-(\d+)$")

BUILTIN_NAMES = tuple(_NAMED) + ("su3-diagonal-<k>", "su2-diagonal-<k>")


def diagonal(ring: FusionRing) -> ModularInvariant:
    return from_blocks(ring, [Block.diagonal([w]) for w in ring.weights],
                       f"{ring.algebra}-diagonal-{ring.level}")


def builtin(name: str) -> ModularInvariant:
    if name in _NAMED:
        algebra, level, blocks = _NAMED[name]
        return from_blocks(build_fusion_ring(algebra, level), blocks, name)
    m = _DIAGONAL.match(name)
    if m:
        return diagonal(build_fusion_ring(m.group(1), int(m.group(2))))
    raise InvariantError(f"unknown built-in invariant {name!r}; known: {', '.join(BUILTIN_NAMES)}")


def from_json(data: dict, name: str = "custom") -> ModularInvariant:
    """Parse ``{"algebra", "level", "blocks" | "matrix"}``.

    Block entries carry ``left``, ``right`` (lists of weights), optional
    ``multiplicity`` and optional ``hc``.
    """
    try:
        ring = build_fusion_ring(data["algebra"], int(data["level"]))
    except KeyError as exc:
        raise InvariantError(f"missing field {exc}") from None
    if "matrix" in data:
        return from_matrix(ring, data["matrix"], data.get("name", name))
    if "blocks" not in data:
        raise InvariantError("need either 'blocks' or 'matrix'")
    blocks = [
        Block(tuple(map(tuple, b["left"])), tuple(map(tuple, b.get("right", b["left"]))),
              int(b.get("multiplicity", 1)), bool(b.get("hc", False)))
        for b in data["blocks"]
    ]
    return from_blocks(ring, blocks, data.get("name", name))


def load(path: str | Path) -> ModularInvariant:
    path = Path(path)
    return from_json(json.loads(path.read_text()), name=path.stem)


def to_json(inv: ModularInvariant) -> dict:
    return {
        "name": inv.name,
        "algebra": inv.ring.algebra,
        "level": inv.ring.level,
        "weights": [list(w) for w in inv.ring.weights],
        "matrix": inv.matrix.tolist(),
    }
