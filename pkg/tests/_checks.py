"""Exact property checks shared by the property and acceptance tests."""
from __future__ import annotations

import numpy as np

from modsplit.fusion import build_fusion_ring
from modsplit.graphs import isomorphic
from modsplit.quantum import associativity_failures, verify_compatibility


def fusion_ring_failures(algebra: str, level: int) -> list[str]:
    """Commutativity, rigidity, unit and associativity of the fusion matrices."""
    ring = build_fusion_ring(algebra, level)
    N = np.stack(ring.matrices)
    c = np.asarray(ring.conj_index)
    bad = []
    if not np.array_equal(N, N.transpose(1, 0, 2)):
        bad.append("coefficients not symmetric")
    if not np.array_equal(N[c], N.transpose(0, 2, 1)):
        bad.append("N_conj(lam) != N_lam^T")
    if not np.array_equal(N[0], np.eye(ring.dim, dtype=np.int64)):
        bad.append("unit")
    F = N.astype(float)
    prod = np.einsum("lab,mbc->lmac", F, F)
    if not np.array_equal(prod, prod.transpose(1, 0, 2, 3)):
        bad.append("matrices do not commute")
    if not np.array_equal(prod, np.einsum("lmn,nac->lmac", F, F)):
        bad.append("not a representation")
    return bad


def double_fusion_failures(ctx) -> list[tuple]:
    """``V_{lam mu} V_{ab} = sum N_{lam a}^c N_{mu b}^e V_{ce}`` for fundamental
    ``(lam, mu)`` in the factorised form, plus chiral commutation."""
    fam = ctx.family
    ring = fam.ring
    L = np.stack(fam.left).astype(float)
    R = np.stack(fam.right).astype(float)
    N = np.stack(ring.matrices).astype(float)
    bad = []
    for f in ring.fundamentals:
        i = ring.idx(f)
        for side, V in (("left", L), ("right", R)):
            lhs = np.einsum("xy,ayz->axz", V[i], V)
            rhs = np.einsum("ac,cxz->axz", N[i], V)
            bad += [(side, f, int(a)) for a in np.flatnonzero(np.any(lhs != rhs, axis=(1, 2)))]
    for a in range(ring.dim):
        comm = L[a] @ R - R @ L[a]
        bad += [("commute", a, int(b)) for b in np.flatnonzero(np.any(comm != 0, axis=(1, 2)))]
    if not np.array_equal(fam.W(0, 0), ctx.invariant.matrix):
        bad.append(("W00",))
    return bad


def compatibility_ok(ctx) -> bool:
    return verify_compatibility(ctx.algebra, ctx.family, ctx.ledger).ok


def representation_failures(O: np.ndarray, S: np.ndarray) -> list[tuple[int, int]]:
    """Pairs with ``S_x S_y != sum_z (O_x)_{yz} S_z``."""
    Sf, Of = S.astype(float), O.astype(float)
    lhs = np.einsum("xab,ybc->xyac", Sf, Sf)
    rhs = np.einsum("xyz,zac->xyac", Of, Sf)
    return [tuple(map(int, p)) for p in np.argwhere(np.any(lhs != rhs, axis=(2, 3)))]


def diagonal_failures(ctx) -> list[str]:
    """The ledger equals the fusion matrices and the only candidate is the
    fusion graph itself, with a unit, self-fusion and a balanced dimension rule."""
    ring = ctx.invariant.ring
    bad = []
    got = sorted(e.matrix.tobytes() for e in ctx.ledger.entries)
    if got != sorted(m.tobytes() for m in ring.matrices) or ctx.ledger.d_O != ring.dim:
        bad.append("ledger")
    if len(ctx.candidates) != 1:
        bad.append("candidates")
    else:
        cand = ctx.candidates[0]
        want = f"A{ring.level + 1}" if ring.algebra == "su2" else f"A{ring.level}"
        if cand.name != want or not isomorphic(cand.adjacency, ring.N(ring.fundamentals[0])):
            bad.append("graph")
        if cand.name not in ctx.graph_algebras:
            bad.append("self fusion")
        dual = ctx.duals.get(cand.name)
        if dual is None or dual.matrices is None:
            bad.append("dual")
        else:
            if representation_failures(ctx.algebra.matrices, dual.matrices):
                bad.append("representation")
            dl = sum(int(m.sum()) ** 2 for m in ctx.annular[cand.name])
            if dl != int((dual.sums.astype(object) ** 2).sum()):
                bad.append("dimension")
    if associativity_failures(ctx.algebra.matrices):
        bad.append("closure")
    return bad


def e5_table(ga) -> tuple[bool, dict]:
    """Label the E5 graph algebra by its own products and check
    ``1_i 1_j = 1_{i+j}``, ``1_i 2_j = 2_{i+j}`` and
    ``2_i 2_j = 2_{i+j} + 2_{i+j-3} + 1_{i+j-3}`` (indices mod 6)."""
    G = ga.matrices
    n, u, g = ga.size, ga.unit, ga.generator

    def mul(a, b):
        return G[a][b]

    inv = [a for a in range(n) if G[a].sum() == n and (G[a].sum(1) == 1).all()]
    gg = mul(g, g)
    five = [a for a in inv if gg[a] == 1]
    if len(five) != 1:
        return False, {}
    first = [a for a in inv if mul(a, five[0])[u] == 1]
    one = {0: u, 1: first[0]}
    for i in range(2, 6):
        one[i] = int(np.argmax(mul(one[1], one[i - 1])))
    two = {i: int(np.argmax(mul(one[(i - 1) % 6], g))) for i in range(6)}
    labels = {**{f"1_{i}": v for i, v in one.items()}, **{f"2_{i}": v for i, v in two.items()}}
    if sorted(labels.values()) != list(range(n)):
        return False, labels

    def vec(*names):
        v = np.zeros(n, dtype=np.int64)
        for name in names:
            v[labels[name]] += 1
        return v

    ok = True
    for i in range(6):
        for j in range(6):
            s, t = (i + j) % 6, (i + j - 3) % 6
            ok &= np.array_equal(mul(one[i], one[j]), vec(f"1_{s}"))
            ok &= np.array_equal(mul(one[i], two[j]), vec(f"2_{s}"))
            ok &= np.array_equal(mul(two[i], two[j]), vec(f"2_{s}", f"2_{t}", f"1_{t}"))
    conj = ga.conjugation()
    ok &= conj[one[1]] == one[5] and conj[two[1]] == two[2]
    return bool(ok), labels
