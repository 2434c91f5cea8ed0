"""Double fusion generators V_{f0}, V_{0f}, the chiral conjugation C and the
double fusion family V_{lam mu}.

The expansion of ``K^x_{f0} = N_f W_{x0}`` over the distinct toric matrices is
unique, which fixes every sum of ``(V_{f0})_{xz}`` over the slots z sharing a
toric matrix.  Blocks between a singleton class and anything else are thereby
fixed outright.  Blocks between two degenerate classes are contingency tables
with known row and column sums; they are enumerated by a small backtracking
search, pruned by commutation of the left and right generators and by
non-negativity of the first recursion steps.  Slot relabelings inside a class
are fixed by keeping only column-lexicographically minimal tables.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism as iso

from .fusion import FusionRing, NegativeEntry
from .linalg import INT, ExactSpan, exact_matmul, identity
from .splitting import ToricLedger

log = logging.getLogger(__name__)


class ChiralError(RuntimeError):
    pass


class NoConsistentAssignment(ChiralError):
    pass


class GaugeAmbiguity(ChiralError):
    def __init__(self, message: str, candidates: list):
        super().__init__(message)
        self.candidates = candidates


def build_Kx(ring: FusionRing, ledger: ToricLedger, x: int, lam=None, mu=None) -> np.ndarray:
    """``K^x_{lam mu} = N_lam W_{x0} N_mu^T`` for the z-slot ``x``."""
    zero = ring.weights[0]
    lam = zero if lam is None else lam
    mu = zero if mu is None else mu
    W = ledger.entries[ledger.slots[x]].matrix
    return exact_matmul(exact_matmul(ring.N(lam), W), ring.N(mu).T)


@dataclass(frozen=True)
class SlotClasses:
    """Slots grouped by toric matrix, with the class holding the transposed matrix."""

    members: tuple[tuple[int, ...], ...]
    of: tuple[int, ...]
    partner: tuple[int, ...]

    @property
    def mult(self) -> list[int]:
        return [len(m) for m in self.members]

    def self_partnered(self) -> list[int]:
        """Degenerate classes whose toric matrix is symmetric."""
        return [P for P, m in enumerate(self.members) if len(m) > 1 and self.partner[P] == P]


def slot_classes(ledger: ToricLedger) -> SlotClasses:
    slots = ledger.slots
    members = tuple(tuple(s for s, c in enumerate(slots) if c == i) for i in range(ledger.distinct))
    key = {e.matrix.tobytes(): i for i, e in enumerate(ledger.entries)}
    partner = []
    for i, e in enumerate(ledger.entries):
        j = key.get(np.ascontiguousarray(e.matrix.T).tobytes())
        if j is None or ledger.entries[j].multiplicity != e.multiplicity:
            raise NoConsistentAssignment(f"transpose of toric matrix {i} is not in the ledger")
        partner.append(j)
    return SlotClasses(members, tuple(slots), tuple(partner))


def _toric_span(ledger: ToricLedger) -> ExactSpan:
    n = ledger.ring.dim
    span = ExactSpan(n * n)
    for i, e in enumerate(ledger.entries):
        if not span.add(e.matrix):
            raise NoConsistentAssignment(f"toric matrix {i} is linearly dependent on earlier ones")
    return span


def class_coefficients(ring: FusionRing, ledger: ToricLedger, f) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of ``N_f W_P`` and ``N_f^T W_P`` over the distinct toric matrices.

    ``A[P, Q]`` is the sum over the slots z of class Q of ``(V_{f0})_{xz}`` for
    any x in class P; ``At[P, Q]`` is the same for ``V_{f0}^T``.
    """
    span = _toric_span(ledger)
    Nf = ring.N(f)
    rows, rows_t = [], []
    for i, e in enumerate(ledger.entries):
        for target, M in ((rows, Nf), (rows_t, Nf.T)):
            c = span.integer_coordinates(exact_matmul(M, e.matrix))
            if c is None or min(c) < 0:
                raise NoConsistentAssignment(
                    f"K^x for toric matrix {i} has no non-negative integer expansion")
            target.append(c)
    return np.array(rows, dtype=INT), np.array(rows_t, dtype=INT)


def involution(m: int, k: int) -> list[int]:
    """Canonical involution on ``m`` slots with ``k`` transpositions (last slots paired)."""
    p = list(range(m))
    for i in range(k):
        a = m - 2 * k + 2 * i
        p[a], p[a + 1] = a + 1, a
    return p


@lru_cache(maxsize=None)
def contingency_tables(p: int, q: int, a: int, b: int) -> tuple[np.ndarray, ...]:
    """Non-negative integer p x q matrices with row sums a and column sums b."""
    if p * a != q * b:
        return ()
    out = []

    def rows(i, cap, acc):
        if i == p:
            if not any(cap):
                out.append(np.array(acc, dtype=INT).reshape(p, q))
            return
        for row in _compositions(a, q):
            if all(r <= c for r, c in zip(row, cap)):
                rows(i + 1, tuple(c - r for c, r in zip(cap, row)), acc + [row])

    rows(0, (b,) * q, [])
    return tuple(out)


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int) -> tuple[tuple[int, ...], ...]:
    if parts == 1:
        return ((total,),)
    return tuple((h,) + rest for h in range(total, -1, -1) for rest in _compositions(total - h, parts - 1))


def chiral_permutation(classes: SlotClasses, kinds: dict[int, int]) -> list[int]:
    """C pairing slot i of P with slot i of its partner class; ``kinds`` picks the
    involution type on each self-partnered degenerate class."""
    C = list(range(len(classes.of)))
    for P, mem in enumerate(classes.members):
        other = classes.members[classes.partner[P]]
        if classes.partner[P] == P and len(mem) > 1:
            p = involution(len(mem), kinds.get(P, 0))
            for i, s in enumerate(mem):
                C[s] = mem[p[i]]
        else:
            for a, b in zip(mem, other):
                C[a] = b
    return C


def _right_from_left(C, V: np.ndarray) -> np.ndarray:
    C = np.asarray(C)
    P = np.zeros_like(V)
    P[np.arange(len(C)), C] = 1
    return exact_matmul(exact_matmul(P, V), P.T)


class _Search:
    """Backtracking over the free contingency blocks for one choice of C."""

    def __init__(self, V0, known0, blocks, classes: SlotClasses, C, algebra):
        self.V = V0.copy()
        self.known = known0.copy()
        self.blocks = blocks
        self.cls = classes
        self.C = np.asarray(C)
        self.su2 = algebra == "su2"
        self.Vf = self.V.astype(float)
        self.nodes = 0
        self.solutions: list[np.ndarray] = []

    def _relabelings(self, Q: int) -> list[tuple[int, ...]]:
        m = len(self.cls.members[Q])
        if self.cls.partner[Q] != Q:
            return list(itertools.permutations(range(m)))
        mem = self.cls.members[Q]
        pos = {s: i for i, s in enumerate(mem)}
        c = [pos[int(self.C[s])] for s in mem]
        return [s for s in itertools.permutations(range(m)) if all(s[c[i]] == c[s[i]] for i in range(m))]

    def consistent(self) -> bool:
        V, known, C = self.Vf, self.known, self.C
        VR = V[np.ix_(C, C)]
        kR = known[np.ix_(C, C)]
        rowL, colL = known.all(1), known.all(0)
        rowR, colR = kR.all(1), kR.all(0)
        pairs = [(VR, rowR, colR), (VR.T, colR, rowR)]
        if not self.su2:
            pairs.append((V.T, colL, rowL))
        for X, rX, cX in pairs:
            m = np.outer(rowL & rX, cX & colL)
            if m.any() and np.any((V @ X)[m] != (X @ V)[m]):
                return False
        m = np.outer(rowL, colL)
        if not m.any():
            return True
        if self.su2:
            if np.any(V[known] != V.T[known]):
                return False
            second = [V @ V - np.eye(len(V))]
        else:
            second = [V @ V - V.T, V @ V.T - np.eye(len(V))]
        return all(not np.any(S[m] < 0) for S in second)

    def run(self, i: int = 0, touched: frozenset = frozenset()) -> None:
        self.nodes += 1
        if i == len(self.blocks):
            self.solutions.append(self.V.copy())
            return
        P, Q, a, b = self.blocks[i]
        mem_p, mem_q = self.cls.members[P], self.cls.members[Q]
        ix = np.ix_(mem_p, mem_q)
        dom = contingency_tables(len(mem_p), len(mem_q), int(a), int(b))
        partner = self.cls.partner
        now = touched | {P, partner[P]}
        if Q not in now:
            group = self._relabelings(Q)
            dom = [t for t in dom
                   if all(tuple(t.reshape(-1)) <= tuple(t[:, list(s)].reshape(-1)) for s in group)]
        now = now | {Q, partner[Q]}
        for t in dom:
            self.V[ix] = t
            self.Vf[ix] = t
            self.known[ix] = True
            if self.consistent():
                self.run(i + 1, now)
        self.V[ix] = 0
        self.Vf[ix] = 0
        self.known[ix] = False


def _order_blocks(free, partner) -> list:
    """Chain the free blocks so each one shares a class with those before it."""
    left = list(free)
    out = []
    touched: set[int] = set()
    while left:
        def rank(blk):
            P, Q = blk[0], blk[1]
            return (P not in touched, Q not in touched, P, Q)
        blk = min(left, key=rank)
        left.remove(blk)
        out.append(blk)
        touched |= {blk[0], blk[1], partner[blk[0]], partner[blk[1]]}
    return out


@dataclass
class GeneratorSet:
    ring: FusionRing
    ledger: ToricLedger
    left: np.ndarray            # V_{f0} for the first fundamental weight
    C: list[int]
    stages: dict = field(default_factory=dict)
    alternatives: list[tuple[np.ndarray, list[int]]] = field(default_factory=list)

    @property
    def right(self) -> np.ndarray:
        return _right_from_left(self.C, self.left)

    @property
    def d_O(self) -> int:
        return len(self.C)

    def generators(self) -> dict[str, np.ndarray]:
        """Named left/right generators and their conjugates."""
        L, R = self.left, self.right
        if self.ring.algebra == "su2":
            return {"L(1)": L, "R(1)": R}
        return {"L(1,0)": L, "L(0,1)": L.T.copy(), "R(1,0)": R, "R(0,1)": R.T.copy()}

    def is_involution(self) -> bool:
        return all(self.C[self.C[i]] == i for i in range(len(self.C)))

    def with_choice(self, k: int) -> "GeneratorSet":
        V, C = self.alternatives[k]
        return GeneratorSet(self.ring, self.ledger, V, C, self.stages, self.alternatives)

    def to_json(self) -> dict:
        return {"left": self.left.tolist(), "chiral_permutation": list(map(int, self.C)),
                "stages": self.stages}


def _fixed_blocks(A, At, classes: SlotClasses, d: int):
    V = np.zeros((d, d), dtype=INT)
    known = np.zeros((d, d), dtype=bool)
    free = []
    mult = classes.mult
    for P, mp in enumerate(classes.members):
        for Q, mq in enumerate(classes.members):
            a, b = int(A[P, Q]), int(At[Q, P])
            ix = np.ix_(mp, mq)
            if len(mp) * a != len(mq) * b:
                raise NoConsistentAssignment(f"row/column sums of block ({P},{Q}) disagree")
            if a == 0:
                known[ix] = True
            elif mult[P] == 1:
                V[ix] = b
                known[ix] = True
            elif mult[Q] == 1:
                V[ix] = a
                known[ix] = True
            else:
                free.append((P, Q, a, b))
    return V, known, free


def _gauge_graph(V: np.ndarray, C, classes: SlotClasses) -> nx.DiGraph:
    g = nx.DiGraph()
    for i in range(len(V)):
        g.add_node(i, c=classes.of[i])
    for i, j in zip(*np.nonzero(V)):
        g.add_edge(int(i), int(j), w=int(V[i, j]), c=0)
    for i, j in enumerate(C):
        if g.has_edge(i, j):
            g[i][j]["c"] = 1
        else:
            g.add_edge(i, int(j), w=0, c=1)
    return g


def gauge_classes(cands: list[tuple[np.ndarray, list[int]]], classes: SlotClasses) -> list[list[int]]:
    """Group candidates related by a class-preserving slot relabeling."""
    graphs = [_gauge_graph(V, C, classes) for V, C in cands]
    nm = iso.categorical_node_match("c", None)
    em = iso.categorical_edge_match(["w", "c"], [None, None])
    groups: list[list[int]] = []
    for k, g in enumerate(graphs):
        for grp in groups:
            if nx.is_isomorphic(graphs[grp[0]], g, node_match=nm, edge_match=em):
                grp.append(k)
                break
        else:
            groups.append([k])
    return groups


def toric_class_sums(ring: FusionRing, ledger: ToricLedger, left: list[np.ndarray],
                     right: list[np.ndarray]) -> np.ndarray | None:
    """Solve ``W_{yy'} = sum_z (O_z)_{yy'} W_{0z}`` for the class sums of O_z.

    Returns ``Q[P]`` = sum of O_z over the slots of class P, as exact integers,
    or None when the expansion is not integral.  Only the pivot weight pairs of
    the toric span are used; the full identity is checked by
    :func:`modsplit.quantum.verify_compatibility`.
    """
    n = ring.dim
    c = np.asarray(ring.conj_index)
    span = ExactSpan(n * n)
    for e in ledger.entries:
        span.add(e.matrix[np.ix_(c, c)])
    inv = span._inverse()
    pivots = [divmod(col, n) for col in span._cols]
    den = 1
    for row in inv:
        for v in row:
            den = den * v.denominator // np.gcd(den, v.denominator)
    V = np.stack([exact_matmul(left[lam], right[mu]) for lam, mu in pivots])
    coef = np.array([[int(v * den) for v in row] for row in inv], dtype=INT)
    Q = np.tensordot(coef, V, axes=1)
    if np.any(Q % den):
        return None
    Q //= den
    return Q if np.all(Q >= 0) else None


def solve_generators(ring: FusionRing, ledger: ToricLedger, *, involutive: bool = True,
                     ) -> GeneratorSet:
    """Determine ``V_{f0}`` for the first fundamental weight and the permutation C.

    All gauge classes surviving the chiral constraints are kept in
    ``alternatives`` (search order); the first one is returned as the choice.
    """
    if not involutive:
        raise NotImplementedError("only involutive chiral conjugations are searched")
    d = ledger.d_O
    f = ring.fundamentals[0] if ring.fundamentals else None
    classes = slot_classes(ledger)
    if f is None:
        V = np.zeros((d, d), dtype=INT)
        return GeneratorSet(ring, ledger, V, list(range(d)), {"raw": 1}, [(V, list(range(d)))])
    A, At = class_coefficients(ring, ledger, f)
    V0, known0, free = _fixed_blocks(A, At, classes, d)
    blocks = _order_blocks(free, classes.partner)
    selfp = classes.self_partnered()
    kinds_list = list(itertools.product(*[range(len(classes.members[P]) // 2 + 1) for P in selfp]))
    stages = {"free_blocks": len(blocks), "involution_types": len(kinds_list)}
    raw: list[tuple[np.ndarray, list[int]]] = []
    nodes = 0
    for kinds in kinds_list:
        C = chiral_permutation(classes, dict(zip(selfp, kinds)))
        s = _Search(V0, known0, blocks, classes, C, ring.algebra)
        if s.consistent():
            s.run()
        nodes += s.nodes
        raw += [(V, C) for V in s.solutions]
    stages["search_nodes"] = nodes
    stages["raw"] = len(raw)
    if not raw:
        raise NoConsistentAssignment("no generator assignment satisfies the chiral constraints")

    recursive = []
    for V, C in raw:
        try:
            left = ring.recursion(V)
            right = ring.recursion(_right_from_left(C, V))
        except NegativeEntry:
            continue
        recursive.append((V, C, left, right))
    stages["nonnegative_family"] = len(recursive)

    groups = gauge_classes([(V, C) for V, C, _, _ in recursive], classes)
    stages["gauge_classes"] = len(groups)
    survivors = []
    for grp in groups:
        V, C, left, right = recursive[grp[0]]
        if toric_class_sums(ring, ledger, left, right) is not None:
            survivors.append((V, C))
    stages["integral_class_sums"] = len(survivors)
    if not survivors:
        raise NoConsistentAssignment("no generator assignment has integral toric class sums")
    log.info("chiral search stages: %s", stages)
    V, C = survivors[0]
    return GeneratorSet(ring, ledger, V, C, stages, survivors)


@dataclass
class DoubleFusionFamily:
    """``V_{lam mu} = V_{lam 0} V_{0 mu}``; the products are formed on demand."""

    ring: FusionRing
    left: list[np.ndarray]     # V_{lam 0}
    right: list[np.ndarray]    # V_{0 mu}

    def __getitem__(self, key) -> np.ndarray:
        lam, mu = key
        return exact_matmul(self.left[lam], self.right[mu])

    @property
    def d_O(self) -> int:
        return self.left[0].shape[0]

    def W(self, x: int, y: int) -> np.ndarray:
        """Double toric matrix ``(W_{xy})_{lam mu} = (V_{lam mu})_{xy}``."""
        L = np.stack(self.left)[:, x, :]            # (lam, z)
        R = np.stack(self.right)[:, :, y]           # (mu, z)
        return exact_matmul(L, R.T)


def expand_family(gens: GeneratorSet) -> DoubleFusionFamily:
    ring = gens.ring
    try:
        left = ring.recursion(gens.left)
        right = ring.recursion(gens.right)
    except NegativeEntry as exc:
        raise NoConsistentAssignment(f"negative entry in double fusion matrix for {exc.weight}") from exc
    return DoubleFusionFamily(ring, left, right)


@dataclass
class DoubleFusionReport:
    ok: bool
    failures: dict[str, list] = field(default_factory=dict)

    def add(self, check: str, where) -> None:
        self.failures.setdefault(check, []).append(where)
        self.ok = False


def verify_double_fusion(family: DoubleFusionFamily, ledger: ToricLedger,
                         ring: FusionRing | None = None) -> DoubleFusionReport:
    """Exact checks of the double fusion identities on fundamental pairs.

    ``sum_z (W_{xz})_{lam mu} W_{zy} = N_lam W_{xy} N_mu^T`` for fundamental
    ``(lam, mu)`` and all x, y (checked in the equivalent form
    ``V_{lam mu} V_{a b} = sum N_{lam a}^c N_{mu b}^e V_{c e}``); chiral
    commutation; ``W_{z0}``, ``W_{0z}`` against the ledger; and
    ``V_{lam* mu*} = V_{lam mu}^T``.  Failures are localized to (x, y).
    """
    ring = ring or family.ring
    rep = DoubleFusionReport(True)
    c = np.asarray(ring.conj_index)
    n = ring.dim
    L = np.stack(family.left).astype(float)
    R = np.stack(family.right).astype(float)
    for f in ring.fundamentals:
        i = ring.idx(f)
        Nf = ring.N(f).astype(float)
        for mu in range(n):
            Vs = L @ R[mu]                                   # V_{lam mu} over lam
            lhs = L[i] @ Vs
            rhs = np.tensordot(Nf, Vs, axes=1)
            for x, y in np.argwhere(np.any(lhs != rhs, axis=0))[:20]:
                rep.add(f"double fusion left {f}", (int(x), int(y)))
        for lam in range(n):
            Vs = L[lam] @ R                                  # V_{lam mu} over mu
            lhs = R[i] @ Vs
            rhs = np.tensordot(Nf, Vs, axes=1)
            for x, y in np.argwhere(np.any(lhs != rhs, axis=0))[:20]:
                rep.add(f"double fusion right {f}", (int(x), int(y)))
        for j in range(n):
            if np.any(L[i] @ R[j] != R[j] @ L[i]):
                rep.add("chiral commutation", (f, ring.weights[j]))
    slot_W = np.stack(ledger.slot_matrices()).astype(float)     # [z, lam, mu]
    col0 = np.einsum("lxw,mw->xlm", L, R[:, :, 0])              # (V_{lam mu})_{z 0}
    row0 = np.einsum("lw,mwz->zlm", L[:, 0, :], R)              # (V_{lam mu})_{0 z}
    for z in np.flatnonzero(np.any(col0 != slot_W, axis=(1, 2))):
        rep.add("W_z0", int(z))
    W0z = slot_W[:, c[:, None], c[None, :]]
    for z in np.flatnonzero(np.any(row0 != W0z, axis=(1, 2))):
        rep.add("W_0z", int(z))
    for lam in range(n):
        if np.any(L[c[lam]] != L[lam].T):
            rep.add("conjugation", ("left", ring.weights[lam]))
        if np.any(R[c[lam]] != R[lam].T):
            rep.add("conjugation", ("right", ring.weights[lam]))
    return rep
