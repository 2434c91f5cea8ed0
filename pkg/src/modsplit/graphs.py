"""Candidate graphs, their annular and graph algebras, modules and the dual annular matrices.

Candidates are the connected components of the left fundamental generator of
the quantum symmetry algebra, grouped by isomorphism.  For each one:

* annular matrices ``F_lambda`` come from the fusion recursion seeded with
  the adjacency matrix (rejected at the first negative entry);
* the graph algebra ``G_a`` (when a self-fusion exists) is solved from
  ``G_unit = 1``, the generator and commutativity, with residual freedom
  fixed by non-negative lattice search and exact associativity;
* modules ``P_a`` over a graph algebra and the dual annular matrices ``S_x``
  over the quantum symmetry algebra are both instances of one problem:
  find ``M_x`` with ``M_x M_y = sum_z (T_x)_{yz} M_z`` from a few seeds.

The module problem splits by rows: the rows ``Y_r[x, :] = (M_x)_{r, :}``
satisfy ``Y_r M_y = L_y Y_r`` for every known ``M_y`` (``(L_y)_{xz} =
(T_x)_{yz}``).  The resulting affine family is identical for every row up
to its right-hand side.  Slots that become determined are fed back.  If
freedom remains, integer points of a single row are enumerated and the
full solution is rebuilt from that row (``M_y = Y_r^+ L_y Y_r``) and
verified exactly.
"""
from __future__ import annotations

import json
import logging
import time
from importlib import resources
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import scipy.sparse as sp
from networkx.algorithms import isomorphism as iso

from .chiral import DoubleFusionFamily, GeneratorSet
from .fusion import FusionRing, NegativeEntry
from .invariants import InvariantError, ModularInvariant, builtin
from .linalg import INT, exact_matmul
from .quantum import OcneanuAlgebra, OcneanuGraph, lattice_points

log = logging.getLogger(__name__)

TOL = 1e-7


class GraphError(RuntimeError):
    pass


class AnnularRejection(GraphError):
    def __init__(self, weight, matrix: np.ndarray):
        super().__init__(f"annular matrix for weight {weight} has a negative entry")
        self.weight = weight
        self.matrix = matrix


class NoSelfFusion(GraphError):
    pass


class MultipleSolutions(GraphError):
    def __init__(self, solutions: list):
        super().__init__(f"{len(solutions)} inequivalent solutions")
        self.solutions = solutions


class ModuleFailure(GraphError):
    pass


class BimoduleFailure(GraphError):
    def __init__(self, pattern: str, triple: tuple[int, int, int]):
        super().__init__(f"associativity fails for pattern {pattern} at {triple}")
        self.pattern = pattern
        self.triple = triple


# --- candidates ------------------------------------------------------------------

_KNOWN_NAMES = {
    ("su3", 5, 12, "I"): "E5",
    ("su3", 9, 12, "I"): "E9",
    ("su3", 9, 12, "II"): "M9",
}


@dataclass
class CandidateGraph:
    name: str
    adjacency: np.ndarray            # fundamental generator restricted to the representative block
    blocks: list[list[int]]          # Oc slots of every isomorphic block
    unit: int | None                 # vertex of the unit slot in the representative, if any
    kind: str                        # "I" if a copy contains the unit slot, else "II"
    status: str = "candidate"
    labels: list[str] | None = None
    source: str = "ocneanu"          # "ocneanu" (a block of the graph) or "fixture"

    @property
    def size(self) -> int:
        return len(self.adjacency)

    @property
    def slots(self) -> list[int]:
        return self.blocks[0]

    def to_json(self) -> dict:
        return {"name": self.name, "size": self.size, "kind": self.kind, "copies": len(self.blocks),
                "blocks": self.blocks, "unit": self.unit, "status": self.status, "source": self.source,
                "labels": self.labels, "adjacency": self.adjacency.tolist()}


def _weighted(A: np.ndarray) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(len(A)))
    for a, b in np.argwhere(A > 0):
        g.add_edge(int(a), int(b), w=int(A[a, b]))
    return g


def isomorphic(A: np.ndarray, B: np.ndarray) -> bool:
    if A.shape != B.shape or sorted(A.sum(1)) != sorted(B.sum(1)):
        return False
    return nx.is_isomorphic(_weighted(A), _weighted(B), edge_match=iso.numerical_edge_match("w", 0))


def isomorphisms(A: np.ndarray, B: np.ndarray) -> list[list[int]]:
    """Vertex maps ``p`` with ``A[i, j] == B[p[i], p[j]]``, sorted."""
    gm = iso.DiGraphMatcher(_weighted(A), _weighted(B), edge_match=iso.numerical_edge_match("w", 0))
    return sorted([m[i] for i in range(len(A))] for m in gm.isomorphisms_iter())


def automorphisms(A: np.ndarray, fixed: tuple[int, ...] = ()) -> list[list[int]]:
    return [p for p in isomorphisms(A, A) if all(p[v] == v for v in fixed)]


def fundamental_name(ring: FusionRing) -> str:
    return "L(1,0)" if ring.algebra == "su3" else "L(1)"


def _is_fusion_graph(ring: FusionRing, A: np.ndarray) -> bool:
    return isomorphic(A, ring.N(ring.fundamentals[0]))


def graph_name(ring: FusionRing, A: np.ndarray, kind: str) -> str:
    if _is_fusion_graph(ring, A):
        return f"A{ring.level + 1}" if ring.algebra == "su2" else f"A{ring.level}"
    return _KNOWN_NAMES.get((ring.algebra, ring.level, len(A), kind), f"X{ring.level}-{len(A)}{kind}")


def extract_candidates(graph: OcneanuGraph, ring: FusionRing) -> list[CandidateGraph]:
    """Components of the left fundamental generator, deduplicated by isomorphism.
    The class of the unit block comes first."""
    gen = fundamental_name(ring)
    A = graph.adjacency[gen]
    groups: list[CandidateGraph] = []
    for comp in graph.components([gen]):
        sub = A[np.ix_(comp, comp)]
        for cand in groups:
            if isomorphic(cand.adjacency, sub):
                cand.blocks.append(comp)
                break
        else:
            unit = comp.index(0) if 0 in comp else None
            kind = "I" if unit is not None else "II"
            groups.append(CandidateGraph("", sub.copy(), [comp], unit, kind))
    for cand in groups:
        cand.name = graph_name(ring, cand.adjacency, cand.kind)
    return groups


def load_fixtures() -> list[dict]:
    text = resources.files("modsplit").joinpath("data/fixtures.json").read_text()
    return json.loads(text)["fixtures"]


def fixture_candidates(inv: ModularInvariant) -> list[CandidateGraph]:
    """Shipped module graphs whose case matches the invariant (by name or by
    equality with the named built-in matrix)."""
    out = []
    for fx in load_fixtures():
        try:
            ref = builtin(fx["case"])
        except InvariantError:
            continue
        if inv.name != fx["case"] and not (ref.ring.algebra == inv.ring.algebra and ref.ring.level == inv.ring.level
                                           and np.array_equal(ref.matrix, inv.matrix)):
            continue
        A = np.asarray(fx["adjacency"], dtype=INT)
        out.append(CandidateGraph(fx["id"], A, [], None, fx["kind"], fx["status"], fx["vertices"], "fixture"))
    return out


# --- annular matrices --------------------------------------------------------------

def annular_family(ring: FusionRing, adjacency: np.ndarray) -> list[np.ndarray]:
    try:
        return ring.recursion(np.asarray(adjacency, dtype=INT))
    except NegativeEntry as exc:
        raise AnnularRejection(exc.weight, exc.matrix) from None


def rigidity_failures(ring: FusionRing, F: list[np.ndarray]) -> list:
    """Weights with ``(F_lambda)_{ab} != (F_{lambda*})_{ba}``."""
    conj = ring.conj_index
    return [ring.weights[i] for i in range(ring.dim) if not np.array_equal(F[i], F[conj[i]].T)]


def rigidity_check(ring: FusionRing, F: list[np.ndarray]) -> bool:
    return not rigidity_failures(ring, F)


def representation_failures(ring: FusionRing, F: list[np.ndarray]) -> list[tuple[int, int]]:
    """Pairs with ``F_lambda F_mu != sum_nu N_{lambda mu}^nu F_nu``."""
    Fs = np.stack(F).astype(float)
    bad = []
    for i, w in enumerate(ring.weights):
        N = ring.N(w).astype(float)           # N[mu, nu]
        lhs = Fs[i] @ Fs
        rhs = np.tensordot(N, Fs, axes=1)
        bad += [(i, int(j)) for j in np.flatnonzero(np.any(lhs != rhs, axis=(1, 2)))]
    return bad


# --- linear helpers ------------------------------------------------------------------

def _null_and_solver(A: sp.spmatrix):
    AtA = (A.T @ A).toarray()
    w, v = np.linalg.eigh(AtA)
    scale = max(1.0, float(w.max()) if w.size else 1.0)
    null = w < 1e-9 * scale
    vk, wk = v[:, ~null], w[~null]

    def solve(b: np.ndarray) -> tuple[np.ndarray, float]:
        s = vk @ ((vk.T @ (A.T @ b)) / wk)
        return s, float(np.abs(A @ s - b).max()) if len(b) else 0.0

    return v[:, null], solve


def commutant(mats: list[np.ndarray], n: int) -> np.ndarray:
    """Orthonormal basis (n*n, k) of the matrices commuting with every entry of ``mats``."""
    I = sp.identity(n, format="csr")
    rows = [sp.kron(I, sp.csr_matrix(M.T.astype(float))) - sp.kron(sp.csr_matrix(M.astype(float)), I)
            for M in mats]
    null, _ = _null_and_solver(sp.vstack(rows).tocsr())
    return null


def _exact_module_failures(T: np.ndarray, M: np.ndarray, limit: int = 1) -> list[tuple[int, int]]:
    """Pairs (x, y) with ``M_x M_y != sum_z (T_x)_{yz} M_z``."""
    Tf, Mf = T.astype(float), M.astype(float)
    if np.abs(Mf).max() ** 2 * M.shape[1] >= 2**52 or np.abs(Tf).max() * np.abs(Mf).max() * len(T) >= 2**52:
        raise OverflowError("entries too large for an exact float check")
    bad = []
    for x in range(len(T)):
        lhs = Mf[x] @ Mf
        rhs = np.tensordot(Tf[x], Mf, axes=1)
        for y in np.flatnonzero(np.any(lhs != rhs, axis=(1, 2))):
            bad.append((x, int(y)))
            if len(bad) >= limit:
                return bad
    return bad


def module_failures(T: np.ndarray, M: np.ndarray, limit: int = 20) -> list[tuple[int, int]]:
    return _exact_module_failures(T, M, limit)


# --- the module problem ----------------------------------------------------------------

@dataclass
class ModuleResult:
    matrices: np.ndarray | None       # (d, m, m) when fully determined
    sums: np.ndarray | None           # d_x = sum of entries of M_x, when linearly determined
    nullity: int
    solutions: int = 0                # valid full solutions found by the row search
    row: int | None = None            # row used by the search
    stats: dict = field(default_factory=dict)
    alternatives: list = field(default_factory=list, repr=False)


class _RowFamily:
    """Affine family of one row ``Y_r`` of all ``M_x``; identical for every row."""

    def __init__(self, T: np.ndarray, m: int, known: dict[int, np.ndarray],
                 linear: list[tuple[np.ndarray, list[np.ndarray]]]):
        d = len(T)
        self.d, self.m = d, m
        Tf = T.astype(float)
        Im, Id = sp.identity(m, format="csr"), sp.identity(d, format="csr")
        blocks, self._rhs = [], []
        for y, My in sorted(known.items()):
            Ly = sp.csr_matrix(Tf[:, y, :])
            blocks.append(sp.kron(Id, sp.csr_matrix(My.T.astype(float))) - sp.kron(Ly, Im))
            self._rhs.append(("zero", d * m))
        for y, My in sorted(known.items()):
            e = sp.csr_matrix(([1.0], ([0], [y])), shape=(1, d))
            blocks.append(sp.kron(e, Im))
            self._rhs.append(("row", My))
        for V, Fs in linear:
            blocks.append(sp.kron(sp.csr_matrix(V.astype(float)), Im))
            self._rhs.append(("chiral", Fs))
        self.A = sp.vstack(blocks).tocsr()
        self.null, self._solve = _null_and_solver(self.A)

    def particular(self, r: int) -> tuple[np.ndarray, float]:
        parts = []
        for kind, data in self._rhs:
            if kind == "zero":
                parts.append(np.zeros(data))
            elif kind == "row":
                parts.append(np.asarray(data[r], float))
            else:
                parts.append(np.concatenate([np.asarray(F[r], float) for F in data]))
        return self._solve(np.concatenate(parts))

    def free_slots(self) -> np.ndarray:
        if not self.null.shape[1]:
            return np.zeros(self.d, dtype=bool)
        return np.abs(self.null).reshape(self.d, self.m, -1).max(axis=(1, 2)) > 1e-9

    def free_sums(self) -> np.ndarray:
        if not self.null.shape[1]:
            return np.zeros(self.d, dtype=bool)
        return np.abs(self.null.reshape(self.d, self.m, -1).sum(axis=1)).max(axis=1) > 1e-9


def _integral(a: np.ndarray) -> np.ndarray | None:
    r = np.rint(a)
    if np.abs(a - r).max(initial=0.0) > TOL:
        return None
    return r.astype(INT)


def solve_module(T: np.ndarray, m: int, seeds: dict[int, np.ndarray],
                 linear: list[tuple[np.ndarray, list[np.ndarray]]] = (),
                 *, search: bool = True, exhaustive: bool = False, ub: int | None = None) -> ModuleResult:
    """Non-negative integral ``M_x`` (m x m) with ``M_x M_y = sum_z (T_x)_{yz} M_z``.

    ``seeds`` fixes some ``M_x``; ``linear`` adds constraints
    ``sum_z V[l, z] M_z = F[l]``.  Raises :class:`ModuleFailure` when the
    linear data are inconsistent or no valid solution exists.
    """
    d = len(T)
    known = {y: np.asarray(M, dtype=INT) for y, M in seeds.items()}
    linear = list(linear)
    stats = {"rounds": 0}
    while True:
        fam = _RowFamily(T, m, known, linear)
        stats["rounds"] += 1
        rows = []
        for r in range(m):
            y, res = fam.particular(r)
            if res > 1e-6:
                raise ModuleFailure(f"linear constraints are inconsistent (row {r}, residual {res:.2g})")
            rows.append(y.reshape(d, m))
        P = np.stack(rows, axis=1)                       # [x, r, :]
        free = fam.free_slots()
        new = {}
        for z in np.flatnonzero(~free):
            if z in known:
                continue
            Mz = _integral(P[z])
            if Mz is None or Mz.min() < 0:
                raise ModuleFailure(f"slot {z} is forced to a non-integral or negative matrix")
            new[int(z)] = Mz
        if not new:
            break
        known.update(new)
    fs = fam.free_sums()
    sums = None
    if not fs.any():
        sums = _integral(P.sum(axis=(1, 2)))
    nullity = fam.null.shape[1]
    stats["known"] = len(known)
    if len(known) == d:
        M = np.stack([known[x] for x in range(d)])
        if _exact_module_failures(T, M):
            raise ModuleFailure("determined matrices violate the module relation")
        return ModuleResult(M, M.sum(axis=(1, 2)), 0, 1, None, stats)
    if not search:
        return ModuleResult(None, sums, nullity, 0, None, stats)
    return _row_search(T, m, known, fam, P, sums, exhaustive, ub, stats)


def _row_search(T, m, known, fam: _RowFamily, P, sums, exhaustive, ub, stats) -> ModuleResult:
    d = len(T)
    Tf = T.astype(float)
    L = Tf.transpose(1, 0, 2)                            # L[y] = (T_x)_{yz} as [x, z]
    N = fam.null
    if sums is not None:
        cap = np.repeat(np.maximum(sums, 0), m).astype(float)
    else:
        cap = np.full(d * m, float(ub or 4 * m))
    rng = np.random.default_rng(0)
    found: list[np.ndarray] = []
    stats["points"] = 0
    t0 = time.perf_counter()
    for r in range(m):
        c = P[:, r, :].reshape(-1)
        generic = (c + N @ rng.standard_normal(N.shape[1])).reshape(d, m)
        if np.linalg.matrix_rank(generic, tol=1e-8) < m:
            continue
        for s in lattice_points(N, c, np.zeros(d * m), cap):
            stats["points"] += 1
            R = _integral(c + N @ s)
            if R is None or R.min() < 0:
                continue
            Rf = R.reshape(d, m).astype(float)
            if np.linalg.matrix_rank(Rf, tol=1e-8) < m:
                continue
            pinv = np.linalg.pinv(Rf)
            M = _integral(np.einsum("ix,yxz,zj->yij", pinv, L, Rf))
            if M is None or M.min() < 0:
                continue
            if any(not np.array_equal(M[y], Mk) for y, Mk in known.items()):
                continue
            if _exact_module_failures(T, M):
                continue
            found.append(M)
            if not exhaustive:
                break
        if found:
            stats["row"] = r
            stats["seconds"] = round(time.perf_counter() - t0, 3)
            M = found[0]
            return ModuleResult(M, M.sum(axis=(1, 2)), N.shape[1], len(found), r, stats, found[1:])
    raise ModuleFailure("no non-negative integral solution in the row search")


# --- graph algebra ----------------------------------------------------------------------

@dataclass
class GraphAlgebra:
    matrices: np.ndarray          # G[a] = G_a, (G_a)_{bc} = coefficient of c in a.b
    unit: int
    generator: int
    raw_solutions: int = 1

    @property
    def size(self) -> int:
        return len(self.matrices)

    def __getitem__(self, a: int) -> np.ndarray:
        return self.matrices[a]

    def conjugation(self) -> list[int]:
        """``a*`` with ``G_{a*} = G_a^T``."""
        G = self.matrices
        out = []
        for a in range(self.size):
            hit = [b for b in range(self.size) if np.array_equal(G[b], G[a].T)]
            out.append(hit[0])
        return out

    def automorphisms(self) -> list[list[int]]:
        """Vertex permutations ``p`` with ``G_{p(a)}[p(b), p(c)] = G_a[b, c]``."""
        G = self.matrices
        out = []
        for p in automorphisms(G[self.generator], (self.unit,)):
            q = np.asarray(p)
            H = np.empty_like(G)
            H[np.ix_(q, q, q)] = G
            if np.array_equal(H, G):
                out.append(p)
        return out


def _canonical(G: np.ndarray, perms: list[list[int]]) -> bytes:
    best = None
    for p in perms:
        q = np.asarray(p)
        H = np.empty_like(G)
        H[np.ix_(q, q, q)] = G
        key = H.tobytes()
        if best is None or key < best:
            best = key
    return best


def solve_graph_algebra(adjacency: np.ndarray, unit: int) -> GraphAlgebra:
    """Commutative non-negative integral fusion algebra on the vertices with
    ``G_unit = 1`` and the generator (the unit's unique neighbour) acting by
    the adjacency matrix.  Solutions related by a graph automorphism fixing
    the unit count as one."""
    A = np.asarray(adjacency, dtype=INT)
    n = len(A)
    nbr = np.flatnonzero(A[unit])
    if len(nbr) != 1 or A[unit, nbr[0]] != 1:
        raise NoSelfFusion(f"vertex {unit} does not have a single simple neighbour")
    g = int(nbr[0])
    gbar_c = np.flatnonzero(A[:, unit])
    if len(gbar_c) != 1:
        raise NoSelfFusion(f"vertex {unit} does not have a single simple predecessor")
    gbar = int(gbar_c[0])
    seeds = {unit: np.eye(n, dtype=INT), g: A, gbar: A.T.copy()}
    if not np.array_equal(A @ A.T, A.T @ A):
        raise NoSelfFusion("adjacency matrix is not normal")
    sols = _graph_algebra_solutions(A, n, unit, seeds)
    if not sols:
        raise NoSelfFusion(f"no non-negative integral graph algebra with unit {unit}")
    perms = automorphisms(A, (unit,))
    classes: dict[bytes, np.ndarray] = {}
    for G in sols:
        classes.setdefault(_canonical(G, perms), G)
    if len(classes) > 1:
        raise MultipleSolutions(list(classes.values()))
    G = min(sols, key=lambda G: G.tobytes())
    return GraphAlgebra(G, unit, g, len(sols))


def _graph_algebra_solutions(A, n, unit, seeds) -> list[np.ndarray]:
    known = dict(seeds)
    while True:
        free = [a for a in range(n) if a not in known]
        if not free:
            break
        C = commutant(list(known.values()), n)         # (n*n, k)
        k = C.shape[1]
        index = {a: i for i, a in enumerate(free)}
        rows, rhs = [], []
        # G_a[unit, :] = e_a
        for a in free:
            for c in range(n):
                row = np.zeros(len(free) * k)
                row[index[a] * k:(index[a] + 1) * k] = C[unit * n + c]
                rows.append(row)
                rhs.append(1.0 if c == a else 0.0)
        # commutativity: G_a[b, c] = G_b[a, c]
        for a in free:
            for b in range(n):
                for c in range(n):
                    row = np.zeros(len(free) * k)
                    row[index[a] * k:(index[a] + 1) * k] += C[b * n + c]
                    if b in index:
                        row[index[b] * k:(index[b] + 1) * k] -= C[a * n + c]
                        val = 0.0
                    else:
                        val = float(known[b][a, c])
                    rows.append(row)
                    rhs.append(val)
        Amat = sp.csr_matrix(np.array(rows))
        null, solve = _null_and_solver(Amat)
        t, res = solve(np.array(rhs))
        if res > 1e-6:
            return []
        coef = t.reshape(len(free), k)
        vals = np.einsum("ak,ik->ai", coef, C)           # (free, n*n)
        nn = np.einsum("ik,akj->aij", C, null.reshape(len(free), k, -1)) if null.shape[1] else None
        new = {}
        for a in free:
            if nn is not None and np.abs(nn[index[a]]).max() > 1e-9:
                continue
            Ga = _integral(vals[index[a]].reshape(n, n))
            if Ga is None or Ga.min() < 0:
                return []
            new[a] = Ga
        if not new:
            # residual freedom: enumerate the non-negative integer points
            F = nn.reshape(-1, nn.shape[2])
            c = vals.reshape(-1)
            sols = []
            for s in lattice_points(F, c, np.zeros(len(c)), np.full(len(c), float(n))):
                V = _integral(c + F @ s)
                if V is None or V.min() < 0:
                    continue
                G = np.zeros((n, n, n), dtype=INT)
                for a, M in known.items():
                    G[a] = M
                for a in free:
                    G[a] = V.reshape(len(free), n, n)[index[a]]
                if _graph_algebra_ok(G):
                    sols.append(G)
            return sols
        known.update(new)
    G = np.stack([known[a] for a in range(n)])
    return [G] if _graph_algebra_ok(G) else []


def _graph_algebra_ok(G: np.ndarray) -> bool:
    if not np.array_equal(G, G.transpose(1, 0, 2)):
        return False
    # G_a G_b = sum_c (G_a)_{bc} G_c
    return not _exact_module_failures(G, G)


def module_family(algebra: GraphAlgebra, seed: np.ndarray, **kw) -> np.ndarray:
    """``P_a`` with ``P_unit = 1``, ``P_generator = seed`` and
    ``P_a P_b = sum_c (G_a)_{bc} P_c``."""
    G = algebra.matrices
    seed = np.asarray(seed, dtype=INT)
    m = len(seed)
    conj = algebra.conjugation()
    seeds = {algebra.unit: np.eye(m, dtype=INT), algebra.generator: seed,
             conj[algebra.generator]: seed.T.copy()}
    res = solve_module(G, m, seeds, **kw)
    return res.matrices


# --- bimodule ------------------------------------------------------------------------------

@dataclass
class Bimodule:
    left: np.ndarray          # P^l_a on the module
    right: np.ndarray         # P^r_a = P^l_{rho(a)}
    H: np.ndarray             # (H_a~)_{b~ c} = (P^r_c)_{a~* b~}
    rho: list[int]
    module_conjugation: list[int]
    solutions: int = 1

    def structure(self, G: np.ndarray) -> np.ndarray:
        """Structure constants ``T[u, v, w]`` (coefficient of w in u.v) of the
        algebra on algebra-vertices followed by module-vertices."""
        n, m = len(G), len(self.left[0])
        T = np.zeros((n + m,) * 3, dtype=INT)
        T[:n, :n, :n] = G
        T[:n, n:, n:] = self.left
        T[n:, :n, n:] = self.right.transpose(1, 0, 2)
        T[n:, n:, :n] = self.H
        return T


_PATTERNS = ("a(bc)", "a(bc~)", "a(b~c)", "a(b~c~)", "a~(bc)", "a~(bc~)", "a~(b~c)", "a~(b~c~)")


def associativity_triple(T: np.ndarray, n: int) -> tuple[str, tuple[int, int, int]] | None:
    """First triple with ``u(vw) != (uv)w`` and its pattern (tilde = module vertex)."""
    Tf = T.astype(float)
    for u in range(len(T)):
        # u(vw): sum_x T[v,w,x] T[u,x,y];  (uv)w: sum_x T[u,v,x] T[x,w,y]
        a = np.einsum("vwx,xy->vwy", Tf, Tf[u])
        b = np.einsum("vx,xwy->vwy", Tf[u], Tf)
        bad = np.argwhere(np.any(a != b, axis=2))
        if len(bad):
            v, w = map(int, bad[0])
            pat = ("a~" if u >= n else "a") + "(" + ("b~" if v >= n else "b") + ("c~" if w >= n else "c") + ")"
            return pat, (u, v, w)
    return None


def bimodule_actions(algebra: GraphAlgebra, left: np.ndarray) -> Bimodule:
    """Right action through a non-trivial automorphism of the graph algebra and
    the closing product of two module vertices.  Every (rho, conjugation)
    pair is tried; the first making the combined algebra associative is
    returned with the number of such pairs in ``solutions``."""
    G = algebra.matrices
    n, m = len(G), len(left[0])
    rhos = [p for p in algebra.automorphisms() if p[algebra.generator] == algebra.generator
            and p != list(range(n))]
    Am = left[algebra.generator]
    conjs = [p for p in isomorphisms(Am, Am.T.copy()) if all(p[p[i]] == i for i in range(m))]
    found: list[Bimodule] = []
    last = None
    for rho in rhos:
        right = left[np.asarray(rho)]
        for cj in conjs:
            # H[a~, b~, c] = (P^r_c)[a~*, b~]
            H = right.transpose(1, 2, 0)[np.asarray(cj)]
            bim = Bimodule(left, right, H, rho, cj)
            fail = associativity_triple(bim.structure(G), n)
            if fail is None:
                found.append(bim)
            else:
                last = fail
    if found:
        found[0].solutions = len(found)
        return found[0]
    if last is None:
        raise BimoduleFailure("none", (-1, -1, -1))
    raise BimoduleFailure(*last)


# --- dual annular matrices ------------------------------------------------------------------

@dataclass
class DualAnnular:
    candidate: str
    matrices: np.ndarray | None       # S[x], (S_x)_{ab} = coefficient of b in x.a
    sums: np.ndarray | None           # d_x
    right: str                        # "A" or "A^T": the right generator acts by twist . right
    twist: list[int]
    nullity: int
    solutions: int
    stats: dict = field(default_factory=dict)


def _generator_slots(algebra: OcneanuAlgebra, gens: GeneratorSet) -> dict[str, int]:
    slots = {}
    for name, M in gens.generators().items():
        hit = [x for x in range(algebra.d_O) if np.array_equal(algebra.matrices[x], M)]
        if not hit:
            raise GraphError(f"generator {name} is not one of the O_x")
        slots[name] = hit[0]
    return slots


def _right_actions(ring: FusionRing, A: np.ndarray) -> list[tuple[str, list[int], np.ndarray]]:
    """Candidate actions of the right fundamental generator: ``P A`` then
    ``P A^T`` over graph automorphisms ``P`` (identity first), keeping those
    whose annular recursion stays non-negative."""
    n = len(A)
    ident = list(range(n))
    perms = [ident] + [p for p in automorphisms(A) if p != ident]
    out, seen = [], set()
    for kind, B in (("A", A), ("A^T", A.T.copy())):
        for p in perms:
            M = np.eye(n, dtype=INT)[np.asarray(p)] @ B
            if M.tobytes() in seen:
                continue
            seen.add(M.tobytes())
            try:
                ring.recursion(M)
            except NegativeEntry:
                continue
            out.append((kind, p, M))
    return out


def _left_block(algebra: OcneanuAlgebra, gens: GeneratorSet) -> list[int]:
    """Slots reachable from the unit along the left fundamental generators."""
    names = [k for k in gens.generators() if k.startswith("L")]
    adj = sum(gens.generators()[k] for k in names)
    g = nx.from_numpy_array(adj, create_using=nx.DiGraph)
    return sorted(nx.descendants(g, 0) | {0})


def dual_annular(algebra: OcneanuAlgebra, gens: GeneratorSet, family: DoubleFusionFamily,
                 cand: CandidateGraph, *, search: bool = True) -> DualAnnular:
    """Matrices ``S_x`` on the candidate with ``S_x S_y = sum_z (O_x)_{yz} S_z``,
    ``S_0 = 1``, the left generators acting by the adjacency matrix, the right
    generators by an automorphism twist of it (or of its transpose) and the
    chiral products acting by products of annular matrices.

    The left chiral subalgebra is solved first (a module over its own
    structure constants seeded with the adjacency matrix); each of its
    solutions seeds the full problem in turn."""
    ring = family.ring
    O = algebra.matrices
    A = cand.adjacency.astype(INT)
    n = len(A)
    slots = _generator_slots(algebra, gens)
    VL = np.array([M[0] for M in family.left]).astype(float)
    Rs = np.stack(family.right).astype(float)
    # (lam x mu) = sum_z (V_{lam 0} V_{0 mu})_{0z} z acts by F_lam F'_mu
    V = _integral(np.einsum("lw,mwz->lmz", VL, Rs)).reshape(-1, algebra.d_O)
    FL = annular_family(ring, A)
    left_seeds = [(0, np.eye(n, dtype=INT))]
    if ring.algebra == "su3":
        left_seeds += [(slots["L(1,0)"], A), (slots["L(0,1)"], A.T.copy())]
    else:
        left_seeds += [(slots["L(1)"], A)]
    B = _left_block(algebra, gens)
    pos = {x: i for i, x in enumerate(B)}
    TB = O[np.ix_(B, B, B)]
    sub = solve_module(TB, n, {pos[x]: M for x, M in left_seeds}, exhaustive=True)
    subs = [sub.matrices] + sub.alternatives
    stats = {"left_block": len(B), "left_solutions": len(subs)}
    last: Exception | None = None
    for kind, twist, AR in _right_actions(ring, A):
        FR = annular_family(ring, AR)
        if ring.algebra == "su3":
            right = [(slots["R(1,0)"], AR), (slots["R(0,1)"], AR.T.copy())]
        else:
            right = [(slots["R(1)"], AR)]
        prods = [exact_matmul(Fl, Fr) for Fl in FL for Fr in FR]
        for Msub in subs:
            pairs = left_seeds + right + [(x, Msub[pos[x]]) for x in B]
            seeds: dict[int, np.ndarray] = {}
            if any(not np.array_equal(seeds.setdefault(x, M), M) for x, M in pairs):
                continue
            try:
                res = solve_module(O, n, seeds, [(V, prods)], search=search)
            except ModuleFailure as exc:
                last = exc
                continue
            return DualAnnular(cand.name, res.matrices, res.sums, kind, twist, res.nullity, res.solutions,
                               {**stats, **res.stats})
    raise ModuleFailure(f"no dual annular family on {cand.name}: {last}")


def dimension_rule(F: list[np.ndarray], sums: np.ndarray) -> dict:
    """``sum_lambda d_lambda^2`` against ``sum_x d_x^2``."""
    dl = np.array([int(M.sum()) for M in F], dtype=object)
    dx = np.array([int(v) for v in sums], dtype=object)
    a, b = int((dl ** 2).sum()), int((dx ** 2).sum())
    return {"annular": a, "dual": b, "equal": a == b}
