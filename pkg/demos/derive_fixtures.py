"""Re-derive the two shipped module-graph fixtures by exhaustive search and
compare them with the packaged data.

E5/3 (for the conjugated E5 invariant): 4x4 non-negative integer matrices
whose spectrum is the set of fundamental-weight eigenvalues on the diagonal
exponents, which are normal and whose annular recursion stays non-negative.
A normal non-negative matrix has every entry bounded by its spectral radius
(about 2.414 here), so entries 0..2 are exhaustive.

Z9 (for E9): NIM-representations of the E9 graph algebra on 12 vertices in
which the order-three invertible vertex acts by a permutation fixing one
vertex of each triality class and cycling the other three.  The search is
split by the eigenspaces of that permutation, each sector pruning against
the E9 characters, and the survivors are solved as full modules.  Entries
are bounded by the spectral radius 1 + sqrt(3).

Run:  python demos/derive_fixtures.py
"""
from __future__ import annotations

import itertools
import time

import numpy as np

from modsplit.fusion import NegativeEntry, modular_s_matrix
from modsplit.graphs import (
    ModuleFailure, extract_candidates, isomorphic, load_fixtures, solve_graph_algebra, solve_module,
)
from modsplit.invariants import builtin
from modsplit.pipeline import run

OMEGA = np.exp(2j * np.pi / 3)


def _classes(mats):
    reps = []
    for M in mats:
        if not any(isomorphic(M, R) for R in reps):
            reps.append(M)
    return reps


def _admissible(ring, D) -> bool:
    if not np.array_equal(D @ D.T, D.T @ D):
        return False
    try:
        ring.recursion(D)
    except NegativeEntry:
        return False
    return True


def derive_e5_quotient() -> list[np.ndarray]:
    inv = builtin("su3-E5-conj")
    ring = inv.ring
    S = modular_s_matrix("su3", 5)
    f = ring.idx((1, 0))
    exps = [i for i in range(ring.dim) if inv.matrix[i, i]]
    gamma = np.array([S[f, i] / S[0, i] for i in exps])
    target = np.poly(gamma)
    trace = round(float(gamma.sum().real))
    trace2 = float((gamma ** 2).sum().real)
    off = [(i, j) for i in range(4) for j in range(4) if i != j]
    offdiag = np.array(list(itertools.product(range(3), repeat=len(off))))
    found = []
    for diag in itertools.product(range(3), repeat=4):
        if sum(diag) != trace:
            continue
        D = np.zeros((len(offdiag), 4, 4), dtype=np.int64)
        for k, (i, j) in enumerate(off):
            D[:, i, j] = offdiag[:, k]
        D[:, range(4), range(4)] = diag
        D = D[np.abs(np.einsum("nij,nji->n", D, D) - trace2) < 1e-6]
        found += [M for M in D if np.allclose(np.poly(M), target, atol=1e-6) and _admissible(ring, M)]
    return _classes(found)


def _e9_characters(ga, v):
    """Values of the generator and of the invertible v on each simultaneous eigenvector."""
    G = ga.matrices
    X = G[ga.generator] + 0.37 * G[v] + 0.113 * G[ga.generator].T
    _, U = np.linalg.eig(X)
    norm = np.einsum("ik,ik->k", U.conj(), U)
    gen = np.einsum("ik,ij,jk->k", U.conj(), G[ga.generator], U) / norm
    inv = np.einsum("ik,ij,jk->k", U.conj(), G[v], U) / norm
    return gen, inv


def derive_z9() -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    _, ctx = run(builtin("su3-E9"), stage="graphs")
    ring = ctx.invariant.ring
    e9, m9 = extract_candidates(ctx.graph, ring)[:2]
    ga = solve_graph_algebra(e9.adjacency, e9.unit)
    G, n, u, g = ga.matrices, ga.size, ga.unit, ga.generator
    A = e9.adjacency
    # triality colouring of the E9 vertices and the order-three invertible of colour 0
    colour = {u: 0}
    queue = [u]
    while queue:
        a = queue.pop(0)
        for b in map(int, np.flatnonzero(A[a])):
            if b not in colour:
                colour[b] = (colour[a] + 1) % 3
                queue.append(b)
    v = next(a for a in range(n) if a != u and colour[a] == 0 and G[a].sum() == n and (G[a].sum(1) == 1).all())
    psi_g, psi_v = _e9_characters(ga, v)
    trivial = psi_g[np.abs(psi_v - 1) < 1e-6] ** 3
    twisted = psi_g[np.abs(psi_v - 1) > 1e-6] ** 3
    # layout per triality t: [f_t, a_t, b_t, c_t]; D maps class t to class t + 1
    triples = np.array(list(itertools.product(range(3), repeat=3)))
    circ = triples[:, 0] + triples[:, 1] * OMEGA + triples[:, 2] * OMEGA ** 2
    combos = np.array(list(itertools.product(range(27), repeat=3)))
    prod = circ[combos[:, 0]] * circ[combos[:, 1]] * circ[combos[:, 2]]
    keep = np.min(np.abs(prod[:, None] - twisted[None, :]), axis=1) < 1e-6
    s3 = np.sqrt(3)
    found = []
    for circs in combos[keep]:
        row_sum = triples[circs].sum(1)
        blocks = [np.stack([np.stack([triples[:, 0], s3 * triples[:, 1]], -1),
                            np.stack([s3 * triples[:, 2], np.full(27, row_sum[t])], -1)], -2) for t in range(3)]
        P = np.einsum("aij,bjk,ckl->abcil", *blocks).reshape(-1, 2, 2)
        ev = np.linalg.eigvals(P)
        ok = (np.min(np.abs(ev[:, :, None] - trivial[None, None, :]), axis=2) < 1e-6).all(1)
        for k in np.flatnonzero(ok):
            picks = np.unravel_index(k, (27, 27, 27))
            D = np.zeros((n, n), dtype=np.int64)
            for t in range(3):
                f0, f1 = 4 * t, 4 * ((t + 1) % 3)
                x, y, z = triples[picks[t]]
                D[f0, f1] = x
                D[f0, f1 + 1:f1 + 4] = y
                D[f0 + 1:f0 + 4, f1] = z
                for i in range(3):
                    for j, val in enumerate(triples[circs[t]]):
                        D[f0 + 1 + i, f1 + 1 + (i + j) % 3] = val
            found.append(D)
    Pi = np.zeros((n, n), dtype=np.int64)
    for t in range(3):
        Pi[4 * t, 4 * t] = 1
        for i in range(3):
            Pi[4 * t + 1 + i, 4 * t + 1 + (i + 1) % 3] = 1
    target = np.poly(psi_g)
    gbar = int(np.flatnonzero(A[:, u])[0])
    good = []
    for D in found:
        if not np.allclose(np.poly(D), target, atol=1e-6) or not _admissible(ring, D):
            continue
        try:
            solve_module(G, n, {u: np.eye(n, dtype=np.int64), g: D, gbar: D.T.copy(), v: Pi})
        except ModuleFailure:
            continue
        good.append(D)
    return _classes(good), e9.adjacency, m9.adjacency


def main() -> None:
    fixtures = {f["id"]: np.asarray(f["adjacency"], dtype=np.int64) for f in load_fixtures()}

    t0 = time.perf_counter()
    e53 = derive_e5_quotient()
    print(f"E5/3 search: {len(e53)} isomorphism class(es) in {time.perf_counter() - t0:.1f}s")
    for M in e53:
        print(M, "matches fixture:", isomorphic(M, fixtures["E5/3"]))

    t0 = time.perf_counter()
    z9, e9, m9 = derive_z9()
    print(f"\nE9 module search: {len(z9)} isomorphism class(es) in {time.perf_counter() - t0:.1f}s")
    for D in z9:
        tag = "E9" if isomorphic(D, e9) else "M9" if isomorphic(D, m9) else "new"
        print(f"class {tag}: matches Z9 fixture = {isomorphic(D, fixtures['Z9'])}")


if __name__ == "__main__":
    main()
