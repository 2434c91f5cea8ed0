"""Modular splitting: the K family and the toric matrices W_{z0}.

The solver walks the distinct matrices ``K_{lam mu} = N_lam M N_mu^T`` by
increasing squared norm and, for each, looks for decompositions over the
toric matrices found so far plus at most one new matrix whose cost in the
quantum-symmetry norm matches ``||K||^2``.  A K whose admissible
decompositions disagree is parked and retried after later discoveries.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .fusion import FusionRing
from .invariants import ModularInvariant
from .linalg import ExactSpan, IntegerOverflow, RowRank, _maxabs, is_nonneg, try_divide

log = logging.getLogger(__name__)


class SplittingError(RuntimeError):
    pass


class AmbiguousDecomposition(SplittingError):
    def __init__(self, message: str, candidates: dict):
        super().__init__(message)
        self.candidates = candidates


class LedgerIncomplete(SplittingError):
    pass


class NonIntegerResidual(SplittingError):
    pass


@dataclass
class KFamily:
    ring: FusionRing
    M: np.ndarray
    matrices: np.ndarray  # shape (d, d, d, d): [lam, mu] -> K_{lam mu}

    def __getitem__(self, key) -> np.ndarray:
        lam, mu = key
        return self.matrices[lam, mu]

    @property
    def dim(self) -> int:
        return self.ring.dim

    def squared_norm(self, lam: int, mu: int) -> int:
        """``||K_{lam mu}||^2 = (K_{lam mu})_{lam* mu*}`` (indices, not weights)."""
        c = self.ring.conj_index
        return int(self.matrices[lam, mu, c[lam], c[mu]])

    def norms(self) -> np.ndarray:
        c = np.asarray(self.ring.conj_index)
        d = self.dim
        return self.matrices[np.arange(d)[:, None], np.arange(d)[None, :], c[:, None], c[None, :]]

    def distinct_by_norm(self) -> dict[int, list[tuple[int, int]]]:
        """First (lam, mu) of each distinct K, grouped by squared norm, canonical order."""
        seen: set[bytes] = set()
        out: dict[int, list[tuple[int, int]]] = defaultdict(list)
        norms = self.norms()
        for lam in range(self.dim):
            for mu in range(self.dim):
                key = self.matrices[lam, mu].tobytes()
                if key in seen:
                    continue
                seen.add(key)
                out[int(norms[lam, mu])].append((lam, mu))
        return dict(sorted(out.items()))

    def rank(self) -> int:
        acc = RowRank(self.dim * self.dim)
        for lam in range(self.dim):
            for mu in range(self.dim):
                acc.add(self.matrices[lam, mu].reshape(-1))
        return acc.rank


def build_K_family(ring: FusionRing, M: np.ndarray | ModularInvariant) -> KFamily:
    if isinstance(M, ModularInvariant):
        M = M.matrix
    if M.shape != (ring.dim, ring.dim):
        raise ValueError(f"invariant shape {M.shape} does not match alcove size {ring.dim}")
    N = np.stack(ring.matrices)
    bound = _maxabs(N) ** 2 * _maxabs(M) * ring.dim**2
    if bound >= 2**62:
        raise IntegerOverflow("K family may overflow int64")
    NM = N @ M
    K = NM[:, None] @ N.transpose(0, 2, 1)[None, :]
    K.setflags(write=False)
    return KFamily(ring, M, K)


def squared_norm(K: KFamily, lam, mu) -> int:
    r = K.ring
    return K.squared_norm(r.idx(lam), r.idx(mu))


def split_cost(a: int, mult: int) -> int:
    """Least ``sum c_i^2`` over non-negative integer splittings of ``a`` into ``mult`` parts."""
    q, rho = divmod(a, mult)
    return mult * q * q + 2 * q * rho + rho


@dataclass
class ToricEntry:
    matrix: np.ndarray
    multiplicity: int
    norm: int          # squared norm of the K that revealed it
    source: tuple[int, int]


@dataclass
class ToricLedger:
    ring: FusionRing
    entries: list[ToricEntry] = field(default_factory=list)

    @property
    def d_O(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    @property
    def distinct(self) -> int:
        return len(self.entries)

    @property
    def slots(self) -> list[int]:
        """Entry index of each z-slot; entries repeated by multiplicity."""
        return [i for i, e in enumerate(self.entries) for _ in range(e.multiplicity)]

    def slot_matrices(self) -> list[np.ndarray]:
        return [self.entries[i].matrix for i in self.slots]

    def profile(self) -> dict[int, int]:
        counts: dict[int, int] = defaultdict(int)
        for e in self.entries:
            counts[e.multiplicity] += 1
        return dict(sorted(counts.items()))

    def to_json(self) -> list[dict]:
        return [{"matrix": e.matrix.tolist(), "multiplicity": e.multiplicity} for e in self.entries]


@dataclass
class SolveTrace:
    """What happened at each norm: counts of explained/new/deferred K's."""

    steps: list[dict] = field(default_factory=list)


def _known_decompositions(K: np.ndarray, budget: int, known: list[ToricEntry], start: int = 0):
    """Yield (coeffs, residual, cost) with ``K - sum a_W W = residual >= 0`` and cost <= budget."""
    stack = [(start, K, 0, ())]
    while stack:
        i, R, cost, coeffs = stack.pop()
        yield coeffs, R, cost
        for j in range(len(known) - 1, i - 1, -1):
            W = known[j].matrix
            a, rest = 1, R - W
            while is_nonneg(rest):
                c = split_cost(a, known[j].multiplicity)
                if cost + c > budget:
                    break
                stack.append((j + 1, rest, cost + c, coeffs + ((j, a),)))
                a += 1
                rest = rest - W


def _new_options(R: np.ndarray, budget: int) -> list[tuple[int, int, np.ndarray]]:
    """Ways ``R = a * W_new`` with ``split_cost(a, mult) == budget`` and ``mult <= a``."""
    out = []
    nz = R[R != 0]
    if nz.size == 0 or budget <= 0:
        return out
    g = int(np.gcd.reduce(nz))
    for a in range(1, budget + 1):
        if g % a:
            continue
        for mult in range(1, a + 1):
            if split_cost(a, mult) == budget:
                out.append((a, mult, R // a))
    return out


def _analyse(K: np.ndarray, s: int, known: list[ToricEntry], span: ExactSpan):
    """Classify one K: ('explained', None) | ('new', option) | ('ambiguous', options) | ('open', None)."""
    explained = False
    options: dict[bytes, tuple[int, int, np.ndarray, tuple]] = {}
    for coeffs, R, cost in _known_decompositions(K, s, known):
        if not R.any():
            if cost == s:
                explained = True
            continue
        for a, mult, W in _new_options(R, s - cost):
            if span.coordinates(W) is not None:
                continue
            key = W.tobytes() + bytes([mult])
            options.setdefault(key, (a, mult, W, coeffs))
    if explained and not options:
        return "explained", None
    if explained or len(options) > 1:
        return "ambiguous", list(options.values())
    if len(options) == 1:
        return "new", next(iter(options.values()))
    return "open", None


def solve_toric(K: KFamily, d_O: int, *, max_norm: int | None = None) -> tuple[ToricLedger, SolveTrace]:
    """Determine the toric matrices and their multiplicities from the K family."""
    ring = K.ring
    ledger = ToricLedger(ring)
    span = ExactSpan(ring.dim**2)
    trace = SolveTrace()
    by_norm = K.distinct_by_norm()
    if by_norm.get(1, [None])[0] != (0, 0):
        raise NonIntegerResidual("K_00 = M must be the first norm-1 matrix")

    def add(W, mult, norm, src):
        span.add(W)
        ledger.entries.append(ToricEntry(W.copy(), mult, norm, src))

    pending: list[tuple[int, int, int]] = []   # (norm, lam, mu)
    for s, pairs in by_norm.items():
        if max_norm is not None and s > max_norm:
            break
        queue = pending + [(s, lam, mu) for lam, mu in pairs]
        step = {"norm": s, "distinct": len(pairs), "explained": 0, "new": 0}
        progress = True
        while progress and queue:
            progress = False
            still: list[tuple[int, int, int]] = []
            for item in queue:
                t, lam, mu = item
                kind, info = _analyse(K[lam, mu], t, ledger.entries, span)
                if kind == "explained":
                    step["explained"] += 1
                elif kind == "new":
                    a, mult, W, _ = info
                    add(W, mult, t, (lam, mu))
                    step["new"] += 1
                    progress = True
                else:
                    still.append(item)
            queue = still
        pending = queue
        step["deferred"] = len(pending)
        step["found_total"] = ledger.d_O
        trace.steps.append(step)
        log.debug("norm %d: %s", s, step)
        if ledger.d_O >= d_O:
            break

    if ledger.d_O != d_O:
        unresolved = {}
        for t, lam, mu in pending:
            kind, info = _analyse(K[lam, mu], t, ledger.entries, span)
            if kind == "ambiguous":
                unresolved[(lam, mu)] = [(a, m) for a, m, _, _ in info]
        if unresolved:
            raise AmbiguousDecomposition(
                f"{len(unresolved)} K matrices admit several norm-consistent decompositions",
                unresolved)
        raise LedgerIncomplete(f"found {ledger.d_O} toric slots, expected d_O = {d_O}")
    return ledger, trace


@dataclass
class SplittingReport:
    ok: bool
    checked: int
    failures: list[tuple[int, int]]


def reconstruct(ledger: ToricLedger, lam: int, mu: int) -> np.ndarray:
    """``sum_z (W_{0z})_{lam mu} W_{z0}`` with ``(W_{0z})_{lam mu} = (W_{z0})_{lam* mu*}``."""
    c = ledger.ring.conj_index
    out = np.zeros_like(ledger.entries[0].matrix)
    for e in ledger.entries:
        coef = e.multiplicity * int(e.matrix[c[lam], c[mu]])
        if coef:
            out += coef * e.matrix
    return out


def verify_modular_splitting(ledger: ToricLedger, K: KFamily) -> SplittingReport:
    """Check the modular splitting equation on every (lam, mu)."""
    c = np.asarray(ledger.ring.conj_index)
    W = np.stack([e.matrix for e in ledger.entries])                 # (r, d, d)
    mult = np.array([e.multiplicity for e in ledger.entries])
    coef = W[:, c[:, None], c[None, :]] * mult[:, None, None]         # (r, lam, mu)
    recon = np.einsum("rlm,rab->lmab", coef, W)
    bad = np.argwhere(np.any(recon != K.matrices, axis=(2, 3)))
    failures = [tuple(map(int, p)) for p in bad]
    return SplittingReport(not failures, K.dim**2, failures)
