"""Quantum symmetry algebra: the matrices O_x and the Ocneanu graph.

Class sums of O_z over slots sharing a toric matrix follow exactly from the
double toric matrices (``W_{yy'} = sum_z (O_z)_{yy'} W_{0z}``), so singleton
classes are known outright.  For degenerate classes the remaining entries are
constrained linearly: each left multiplication ``L_a`` (with
``(L_a)_{zb} = (O_z)_{ab}``) commutes with every known right multiplication,
every unknown ``O_x`` commutes with the central generators, and class sums are
fixed.  The integer points of that affine family are enumerated by a
branch-and-bound over pivot entries (LP relaxations give the ranges) and each
point is checked for associativity in exact integer arithmetic.  When the
family is too large to enumerate, one slot is fixed first and the family is
rebuilt with it as known data.

Candidate generation uses floating point; everything accepted is verified
exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .chiral import DoubleFusionFamily, DoubleFusionReport, GeneratorSet, slot_classes, toric_class_sums
from .linalg import INT, RowRank

log = logging.getLogger(__name__)

TOL = 1e-7


class ClosureFailure(RuntimeError):
    pass


class NonAssociative(ClosureFailure):
    pass


@dataclass
class OcneanuAlgebra:
    matrices: np.ndarray                 # (d_O, d_O, d_O): O[x] is O_x
    generators: dict[str, int]           # generator name -> slot
    stats: dict = field(default_factory=dict)
    alternatives: list = field(default_factory=list, repr=False)

    @property
    def d_O(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, x: int) -> np.ndarray:
        return self.matrices[x]

    def structure(self) -> np.ndarray:
        """``N[x, y, z] = O^z_{xy} = (O_y)_{xz}``."""
        return self.matrices.transpose(1, 0, 2)

    def is_commutative(self) -> bool:
        N = self.structure()
        return bool(np.array_equal(N, N.transpose(1, 0, 2)))

    def centre_dimension(self) -> int:
        return centre_dimension(self.matrices)


def centre_dimension(O: np.ndarray) -> int:
    """Exact dimension of the centre of the algebra with structure ``(O_y)_{xz}``."""
    N = O.transpose(1, 0, 2)
    comm = N - N.transpose(1, 0, 2)            # [z, x, w]: z x - x z coefficient on w
    rows = comm.transpose(1, 2, 0).reshape(-1, O.shape[0])
    acc = RowRank(O.shape[0])
    for row in rows:
        if row.any():
            acc.add(row)
        if acc.rank == O.shape[0]:
            break
    return O.shape[0] - acc.rank


def associativity_failures(O: np.ndarray, limit: int = 20) -> list[tuple[int, int]]:
    """Pairs (x, y) with ``O_x O_y != sum_z (O_y)_{xz} O_z``; exact."""
    d = O.shape[0]
    if np.abs(O).max() ** 2 * d >= 2**52:
        raise OverflowError("structure constants too large for an exact float check")
    F = O.astype(float)
    bad = []
    for x in range(d):
        lhs = F[x] @ F                                   # [y] -> O_x O_y
        rhs = np.tensordot(F[:, x, :], F, axes=1)        # [y] -> sum_z (O_y)_{xz} O_z
        for y in np.flatnonzero(np.any(lhs != rhs, axis=(1, 2))):
            bad.append((x, int(y)))
            if len(bad) >= limit:
                return bad
    return bad


def _quick_associative(F: np.ndarray, rng: np.random.Generator) -> bool:
    r = rng.integers(-3, 4, size=F.shape[0]).astype(float)
    R = np.tensordot(r, F, axes=1)
    return bool(np.array_equal(F @ R, np.tensordot(R, F, axes=1)))


# --- affine families of unknown O entries ---------------------------------------

@dataclass
class _Family:
    slots: list[int]            # unknown slots x
    x: np.ndarray               # entry -> slot
    a: np.ndarray               # entry -> row
    b: np.ndarray               # entry -> column
    c: np.ndarray               # particular values
    F: np.ndarray               # (entries, dim)
    ub: np.ndarray

    @property
    def dim(self) -> int:
        return self.F.shape[1]


def _nullspace(M: np.ndarray, rhs: np.ndarray):
    w, v = np.linalg.eigh(M)
    scale = max(1.0, float(w.max()) if w.size else 1.0)
    null = w < 1e-9 * scale
    keep = ~null
    p = v[:, keep] @ ((v[:, keep].T @ rhs) / w[keep])
    return p, v[:, null]


class _Closure:
    def __init__(self, gens: GeneratorSet, family: DoubleFusionFamily, Q: np.ndarray):
        self.gens = gens
        self.d = gens.d_O
        self.cls = slot_classes(gens.ledger)
        self.Q = Q
        self.gen_mats = [g.astype(float) for g in gens.generators().values()]
        nnz = int(np.count_nonzero(gens.ledger.entries[0].matrix))
        self.centre_target = nnz
        self.rng = np.random.default_rng(0)
        self.stats = {"families": 0, "lattice_points": 0, "associative": 0, "branches": 0}
        d = self.d
        I = sp.identity(d, format="csr")
        self._I = I
        self._gen_ops = [sp.kron(I, sp.csr_matrix(G.T)) - sp.kron(sp.csr_matrix(G), I)
                         for G in self.gen_mats]

    # rows of L_a with fixed values: row 0 is the identity, singleton slots are central
    def _row_known(self, a: int) -> np.ndarray | None:
        if a == 0:
            return np.eye(self.d)
        if len(self.cls.members[self.cls.of[a]]) == 1:
            return self.Q[self.cls.of[a]].astype(float)
        return None

    def family(self, known: dict[int, np.ndarray]) -> _Family | None:
        """Affine family of all entries of the unknown O_x, or None if infeasible."""
        self.stats["families"] += 1
        d, cls, Q = self.d, self.cls, self.Q
        unknown = [z for z in range(d) if z not in known]
        uidx = {z: i for i, z in enumerate(unknown)}
        nu = len(unknown)
        ops = list(self._gen_ops)
        for y, Oy in known.items():
            if len(cls.members[cls.of[y]]) > 1:
                G = sp.csr_matrix(Oy.astype(float))
                ops.append(sp.kron(self._I, G.T) - sp.kron(G, self._I))
        A = sp.vstack(ops).tocsc()

        per_row = {}
        for a in range(d):
            fixed = self._row_known(a)
            P0 = np.zeros((nu, d))
            if fixed is not None:
                P0[:] = fixed[unknown]
                per_row[a] = (P0, np.zeros((nu, d, 0)))
                continue
            Lk = np.zeros((d, d))
            for z, Oz in known.items():
                Lk[z] = Oz[a]
            var_z, var_b = [], []
            for z in unknown:
                for b in np.flatnonzero(Q[cls.of[z]][a]):
                    var_z.append(z)
                    var_b.append(b)
            var_z, var_b = np.array(var_z, dtype=int), np.array(var_b, dtype=int)
            cols = var_z * d + var_b
            Au = A[:, cols]
            rhs = -(A @ Lk.reshape(-1))
            extra, extra_rhs = [], []
            pos = {(int(z), int(b)): i for i, (z, b) in enumerate(zip(var_z, var_b))}
            for P, mem in enumerate(cls.members):
                if len(mem) == 1:
                    continue
                for b in np.flatnonzero(Q[P][a]):
                    row = np.zeros(len(cols))
                    const = 0.0
                    for z in mem:
                        if z in known:
                            const += known[z][a, b]
                        else:
                            row[pos[(z, int(b))]] = 1
                    extra.append(row)
                    extra_rhs.append(Q[P][a, b] - const)
            if extra:
                Au = sp.vstack([Au, sp.csr_matrix(np.array(extra))]).tocsr()
                rhs = np.concatenate([rhs, extra_rhs])
            M = (Au.T @ Au).toarray()
            p, N = _nullspace(M, Au.T @ rhs)
            if np.abs(Au @ p - rhs).max() > 1e-6:
                return None
            Nt = np.zeros((nu, d, N.shape[1]))
            zi = np.array([uidx[z] for z in var_z], dtype=int)
            P0[zi, var_b] = p
            Nt[zi, var_b] = N
            per_row[a] = (P0, Nt)

        off, K = {}, 0
        for a in range(d):
            off[a] = K
            K += per_row[a][1].shape[2]
        M = np.zeros((K, K))
        rhs = np.zeros(K)
        for G in self.gen_mats:
            for a in range(d):
                Pa, Na = per_row[a]
                blocks = {}
                const = Pa @ G
                if Na.shape[2]:
                    blocks[a] = np.einsum("xbk,bc->xck", Na, G)
                for b in np.flatnonzero(G[a]):
                    const = const - G[a, b] * per_row[b][0]
                    if per_row[b][1].shape[2]:
                        blocks[b] = blocks.get(b, 0) - G[a, b] * per_row[b][1]
                if not blocks:
                    if np.abs(const).max() > 1e-6:
                        return None
                    continue
                keys = sorted(blocks)
                D = np.concatenate([blocks[k].reshape(nu * d, -1) for k in keys], axis=1)
                idx = np.concatenate([np.arange(off[k], off[k] + per_row[k][1].shape[2]) for k in keys])
                M[np.ix_(idx, idx)] += D.T @ D
                rhs[idx] -= D.T @ const.reshape(-1)
        t0, N = _nullspace(M, rhs)

        xs, as_, bs, cs, Fs, ubs = [], [], [], [], [], []
        for a in range(d):
            Pa, Na = per_row[a]
            if Na.shape[2]:
                sub = slice(off[a], off[a] + Na.shape[2])
                val = Pa + np.einsum("xbk,k->xb", Na, t0[sub])
                lin = np.einsum("xbk,kj->xbj", Na, N[sub])
            else:
                val, lin = Pa, np.zeros((nu, d, N.shape[1]))
            for i, z in enumerate(unknown):
                bsupp = np.flatnonzero(Q[cls.of[z]][a])
                xs.append(np.full(len(bsupp), z))
                as_.append(np.full(len(bsupp), a))
                bs.append(bsupp)
                cs.append(val[i, bsupp])
                Fs.append(lin[i, bsupp])
                ubs.append(Q[cls.of[z]][a, bsupp])
        fam = _Family(unknown, np.concatenate(xs), np.concatenate(as_), np.concatenate(bs),
                      np.concatenate(cs), np.concatenate(Fs), np.concatenate(ubs).astype(float))
        return fam

    def assemble(self, known: dict, fam: _Family | None, s: np.ndarray | None) -> np.ndarray | None:
        d = self.d
        O = np.zeros((d, d, d), dtype=INT)
        for z, Oz in known.items():
            O[z] = Oz
        if fam is not None:
            vals = fam.c + (fam.F @ s if fam.dim else 0)
            r = np.rint(vals)
            if np.abs(vals - r).max() > TOL or r.min() < 0:
                return None
            O[fam.x, fam.a, fam.b] = r.astype(INT)
        return O

    def accept(self, O: np.ndarray) -> bool:
        F = O.astype(float)
        if not _quick_associative(F, self.rng):
            return False
        if associativity_failures(O, limit=1):
            return False
        self.stats["associative"] += 1
        return centre_dimension(O) == self.centre_target


def _lp_range(F, c, lb, ub, row, eq_rows, eq_vals):
    n = F.shape[1]
    A_ub = np.vstack([F, -F])
    b_ub = np.concatenate([ub - c, c - lb])
    A_eq = F[eq_rows] if eq_rows else None
    b_eq = (np.asarray(eq_vals) - c[eq_rows]) if eq_rows else None
    out = []
    for sign in (1, -1):
        res = linprog(sign * F[row], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=[(None, None)] * n, method="highs")
        if res.status != 0:
            return None
        out.append(sign * res.fun + c[row])
    return int(np.ceil(out[0] - 1e-6)), int(np.floor(out[1] + 1e-6))


def lattice_points(F: np.ndarray, c: np.ndarray, lb: np.ndarray, ub: np.ndarray,
                   pivots_from: np.ndarray | None = None, limit: int | None = None):
    """Yield ``s`` with ``c + F s`` integral and inside ``[lb, ub]``, in lexicographic
    order of the pivot entries (the first independent rows of F)."""
    # merge duplicate constraint rows
    key = np.round(np.hstack([F, c[:, None]]), 9)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    lo = np.full(len(first), -np.inf)
    hi = np.full(len(first), np.inf)
    np.maximum.at(lo, inv, lb)
    np.minimum.at(hi, inv, ub)
    Fu, cu = F[first], c[first]
    cand = np.arange(len(Fu)) if pivots_from is None else np.unique(inv[pivots_from])
    order = cand[np.argsort(first[cand], kind="stable")]
    pivots = []
    basis = np.zeros((0, F.shape[1]))
    for i in order:
        trial = np.vstack([basis, Fu[i]])
        if np.linalg.matrix_rank(trial, tol=1e-8) > len(pivots):
            pivots.append(int(i))
            basis = trial
            if len(pivots) == F.shape[1]:
                break
    found = 0

    def dfs(vals):
        nonlocal found
        k = len(vals)
        if k == len(pivots):
            s = np.linalg.lstsq(Fu[pivots], np.asarray(vals, float) - cu[pivots], rcond=None)[0]
            yield s
            found += 1
            return
        rng = _lp_range(Fu, cu, lo, hi, pivots[k], pivots[:k], vals)
        if rng is None:
            return
        for v in range(rng[0], rng[1] + 1):
            yield from dfs(vals + [v])
            if limit is not None and found >= limit:
                return

    yield from dfs([])


def close_algebra(gens: GeneratorSet, family: DoubleFusionFamily, *, exhaustive: bool = False,
                  max_direct_dim: int = 12) -> OcneanuAlgebra:
    """Reconstruct all O_x from the chiral generators.

    Returns the first valid algebra in the deterministic search order (or, with
    ``exhaustive``, counts all of them in ``stats['solutions']`` and returns the
    lexicographically smallest).
    """
    ring, ledger = gens.ring, gens.ledger
    Q = toric_class_sums(ring, ledger, family.left, family.right)
    if Q is None:
        raise ClosureFailure("class sums of O are not integral")
    cl = _Closure(gens, family, Q)
    cls = cl.cls
    known = {z: Q[cls.of[z]].copy() for z in range(gens.d_O) if len(cls.members[cls.of[z]]) == 1}
    if not np.array_equal(known.get(0), np.eye(gens.d_O, dtype=INT)):
        raise ClosureFailure("O_0 is not the identity")
    solutions: list[np.ndarray] = []

    def solve(known):
        if len(known) == gens.d_O:
            O = cl.assemble(known, None, None)
            if cl.accept(O):
                solutions.append(O)
            return
        fam = cl.family(known)
        if fam is None:
            return
        lb = np.zeros(len(fam.c))
        if fam.dim <= max_direct_dim:
            for s in lattice_points(fam.F, fam.c, lb, fam.ub):
                cl.stats["lattice_points"] += 1
                O = cl.assemble(known, fam, s)
                if O is not None and cl.accept(O):
                    solutions.append(O)
                    if not exhaustive:
                        return
            return
        # branch on the unknown slot whose entries span the fewest directions
        best = None
        for z in fam.slots:
            sel = np.flatnonzero(fam.x == z)
            rank = np.linalg.matrix_rank(fam.F[sel], tol=1e-8)
            if rank and (best is None or rank < best[0]):
                best = (rank, z, sel)
        _, z, sel = best
        seen = set()
        for s in lattice_points(fam.F, fam.c, lb, fam.ub, pivots_from=sel):
            vals = fam.c[sel] + fam.F[sel] @ s
            r = np.rint(vals)
            if np.abs(vals - r).max() > TOL:
                continue
            Oz = np.zeros((gens.d_O, gens.d_O), dtype=INT)
            Oz[fam.a[sel], fam.b[sel]] = r.astype(INT)
            if Oz.tobytes() in seen:
                continue
            seen.add(Oz.tobytes())
            cl.stats["branches"] += 1
            solve({**known, z: Oz})
            if solutions and not exhaustive:
                return

    solve(known)
    cl.stats["solutions"] = len(solutions)
    if not solutions:
        raise ClosureFailure("no non-negative integral associative closure with the expected centre")
    best = min(solutions, key=lambda O: O.tobytes()) if exhaustive else solutions[0]
    names = {}
    for name, G in gens.generators().items():
        hit = [x for x in range(gens.d_O) if np.array_equal(best[x], G)]
        if hit:
            names[name] = hit[0]
    return OcneanuAlgebra(best, names, cl.stats, [O for O in solutions if O is not best])


# --- compatibility ---------------------------------------------------------------

def verify_compatibility(algebra: OcneanuAlgebra, family: DoubleFusionFamily,
                         ledger=None) -> DoubleFusionReport:
    """Exact checks: ``O_x V = V O_x = sum_z V_{xz} O_z`` for the fundamental
    generators, ``W_{yy'} = sum_z (O_z)_{yy'} W_{0z}`` for all (y, y'), the
    representation property and ``O_0 = 1``."""
    rep = DoubleFusionReport(True)
    O = algebra.matrices
    d = algebra.d_O
    F = O.astype(float)
    ring = family.ring
    if not np.array_equal(O[0], np.eye(d, dtype=INT)):
        rep.add("unit", 0)
    if O.min() < 0:
        rep.add("non-negative", int(np.argwhere(O < 0)[0][0]))
    for side, mats in (("left", family.left), ("right", family.right)):
        for f in ring.fundamentals:
            V = mats[ring.idx(f)].astype(float)
            lin = np.tensordot(V, F, axes=1)
            left_mul = F @ V
            right_mul = V @ F
            for x in np.flatnonzero(np.any(left_mul != lin, axis=(1, 2)) | np.any(right_mul != lin, axis=(1, 2))):
                rep.add(f"generator action {side} {f}", int(x))
    L = np.stack(family.left).astype(float)
    R = np.stack(family.right).astype(float)
    W0z = np.einsum("lw,mwz->zlm", L[:, 0, :], R).reshape(d, -1)
    for y in range(d):
        lhs = np.einsum("lw,mwv->vlm", L[:, y, :], R).reshape(d, -1)      # [y', (lam, mu)]
        rhs = F[:, y, :].T @ W0z
        for v in np.flatnonzero(np.any(lhs != rhs, axis=1)):
            rep.add("toric expansion", (y, int(v)))
    for pair in associativity_failures(O):
        rep.add("representation", pair)
    return rep


def toric_rank(ledger) -> int:
    acc = RowRank(ledger.entries[0].matrix.size)
    for e in ledger.entries:
        acc.add(e.matrix.reshape(-1))
    return acc.rank


def commutativity_check(algebra: OcneanuAlgebra, ledger) -> dict:
    """Commutativity of Oc against the degeneracy flag ``r < d_O``; a mismatch is
    logged as a warning, never treated as an error."""
    r = toric_rank(ledger)
    commutative = algebra.is_commutative()
    agrees = commutative == (r == algebra.d_O)
    if not agrees:
        log.warning("commutativity (%s) disagrees with toric rank %d of %d", commutative, r, algebra.d_O)
    return {"commutative": commutative, "toric_rank": r, "d_O": algebra.d_O, "agrees": agrees}


# --- Ocneanu graph ---------------------------------------------------------------

@dataclass
class OcneanuGraph:
    adjacency: dict[str, np.ndarray]     # generator name -> matrix
    chiral: list[int]                    # chiral pairing permutation C
    labels: list[str]

    @property
    def size(self) -> int:
        return len(self.labels)

    def nx_graph(self, names=None) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(range(self.size))
        for name in names or sorted(self.adjacency):
            for a, b in np.argwhere(self.adjacency[name] > 0):
                g.add_edge(int(a), int(b), key=name, mult=int(self.adjacency[name][a, b]))
        return g

    def components(self, names=None) -> list[list[int]]:
        g = self.nx_graph(names)
        return sorted((sorted(c) for c in nx.weakly_connected_components(g)), key=lambda c: (c[0], len(c)))

    def grading(self, name: str, modulus: int) -> list[int] | None:
        """Colouring with every ``name`` edge advancing the colour by one mod
        ``modulus``; None if no such colouring exists."""
        A = self.adjacency[name]
        colour = [-1] * self.size
        for start in range(self.size):
            if colour[start] >= 0:
                continue
            colour[start] = 0
            queue = [start]
            while queue:
                u = queue.pop()
                nbrs = [(int(v), 1) for v in np.flatnonzero(A[u])] + [(int(v), -1) for v in np.flatnonzero(A[:, u])]
                for v, step in nbrs:
                    want = (colour[u] + step) % modulus
                    if colour[v] < 0:
                        colour[v] = want
                        queue.append(v)
                    elif colour[v] != want:
                        return None
        return colour

    def to_dot(self) -> str:
        lines = ["digraph Oc {"]
        for v, lab in enumerate(self.labels):
            lines.append(f'  {v} [label="{lab}"];')
        for name in sorted(self.adjacency):
            A = self.adjacency[name]
            for a, b in np.argwhere(A > 0):
                m = int(A[a, b])
                extra = f', mult={m}, label="{m}"' if m > 1 else ""
                lines.append(f'  {a} -> {b} [generator="{name}"{extra}];')
        for x, y in enumerate(self.chiral):
            if x < y:
                lines.append(f"  {x} -> {y} [style=dashed, dir=none];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def assemble_graph(algebra: OcneanuAlgebra, gens: GeneratorSet) -> OcneanuGraph:
    return OcneanuGraph({k: v.copy() for k, v in gens.generators().items()}, list(map(int, gens.C)),
                        [str(z) for z in range(algebra.d_O)])


def triality_grading(graph: OcneanuGraph, algebra: str = "su3") -> dict[str, list[int] | None]:
    """Gradings along the fundamental left and right generators (mod 3 for su3,
    mod 2 for su2)."""
    modulus = 3 if algebra == "su3" else 2
    return {name: graph.grading(name, modulus) for name in sorted(graph.adjacency)
            if name in ("L(1,0)", "R(1,0)", "L(1)", "R(1)")}
