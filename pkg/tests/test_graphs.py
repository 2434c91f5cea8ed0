from __future__ import annotations

import numpy as np
import pytest

from modsplit.fusion import build_fusion_ring
from modsplit.graphs import (
    AnnularRejection, Bimodule, NoSelfFusion, annular_family, associativity_triple,
    automorphisms, bimodule_actions, commutant, dimension_rule, fixture_candidates, graph_name,
    ModuleFailure, isomorphic, isomorphisms, load_fixtures, module_failures, module_family, representation_failures,
    rigidity_check, rigidity_failures, solve_graph_algebra, solve_module,
)
from modsplit.invariants import builtin


def _cand(ctx, name):
    return next(c for c in ctx.candidates if c.name == name)


def _invertibles(G):
    n = len(G)
    return [a for a in range(n) if G[a].sum() == n and (G[a].sum(1) == 1).all()]


def test_isomorphism_helpers():
    cyc = np.roll(np.eye(3, dtype=np.int64), 1, axis=1)
    assert len(automorphisms(cyc)) == 3
    assert automorphisms(cyc, (0,)) == [[0, 1, 2]]
    p = [2, 0, 1]
    P = np.eye(3, dtype=np.int64)[p]
    B = P.T @ cyc @ P
    for q in isomorphisms(cyc, B):
        assert all(cyc[i, j] == B[q[i], q[j]] for i in range(3) for j in range(3))
    assert not isomorphic(cyc, cyc.T @ cyc)
    weighted = np.array([[0, 2], [1, 0]])
    assert not isomorphic(weighted, np.array([[0, 1], [2, 1]]))


def test_fusion_graph_names():
    ring = build_fusion_ring("su3", 4)
    assert graph_name(ring, ring.N((1, 0)), "I") == "A4"
    ring2 = build_fusion_ring("su2", 6)
    assert graph_name(ring2, ring2.N((1,)), "I") == "A7"


def test_commutant_dimension():
    ring = build_fusion_ring("su2", 4)
    C = commutant([ring.N((1,))], ring.dim)
    # the commutant of a generator of a commutative semisimple algebra is that algebra
    assert C.shape[1] == ring.dim


def test_fusion_graph_annular_family_is_fusion_ring():
    ring = build_fusion_ring("su3", 5)
    F = annular_family(ring, ring.N((1, 0)))
    assert all(np.array_equal(a, b) for a, b in zip(F, ring.matrices))
    assert rigidity_check(ring, F)
    assert representation_failures(ring, F) == []


def test_annular_rejection():
    ring = build_fusion_ring("su3", 5)
    bad = np.array([[0, 1], [0, 0]], dtype=np.int64)
    with pytest.raises(AnnularRejection) as info:
        annular_family(ring, bad)
    assert info.value.matrix.min() < 0


def test_rigidity_detects_corruption():
    ring = build_fusion_ring("su3", 3)
    F = [m.copy() for m in ring.matrices]
    k = ring.idx((2, 0))
    F[k][0, 1] += 1
    assert set(rigidity_failures(ring, F)) == {(2, 0), (0, 2)}
    assert not rigidity_check(ring, F)


def test_fusion_graph_self_fusion_is_fusion_ring():
    ring = build_fusion_ring("su3", 4)
    ga = solve_graph_algebra(ring.N((1, 0)), 0)
    assert ga.generator == ring.idx((1, 0))
    for a, w in enumerate(ring.weights):
        assert np.array_equal(ga[a], ring.N(w))


def test_regular_module_is_algebra(e5):
    ga = e5.graph_algebras["E5"]
    P = module_family(ga, ga[ga.generator])
    assert np.array_equal(P, ga.matrices)


def test_solve_module_rejects_bad_seed(e5):
    ga = e5.graph_algebras["E5"]
    T = ga.matrices
    n = ga.size
    wrong = np.eye(n, dtype=np.int64)[::-1].copy()
    with pytest.raises(ModuleFailure):
        solve_module(T, n, {ga.unit: np.eye(n, dtype=np.int64), ga.generator: wrong})


def test_e5_candidates(e5):
    assert [c.name for c in e5.candidates] == ["E5"]
    cand = e5.candidates[0]
    assert cand.kind == "I" and len(cand.blocks) == 2 and cand.size == 12


def test_e5_conjugation_is_graph_involution(e5):
    ga = e5.graph_algebras["E5"]
    A = e5.candidates[0].adjacency
    conj = ga.conjugation()
    assert all(conj[conj[a]] == a for a in range(ga.size))
    P = np.eye(ga.size, dtype=np.int64)[conj]
    assert np.array_equal(P @ A @ P.T, A.T)
    # invertible vertices are exchanged in pairs except the unit and one fixed point
    inv = _invertibles(ga.matrices)
    assert len(inv) == 6
    assert sum(conj[a] == a for a in inv) == 2


def test_e5_conj_candidates_include_fixture(e5_conj):
    names = [c.name for c in e5_conj.candidates]
    assert names == ["E5", "E5/3"]
    fx = _cand(e5_conj, "E5/3")
    assert fx.source == "fixture" and fx.size == 4


def test_fixtures_shape():
    fx = {f["id"]: f for f in load_fixtures()}
    assert set(fx) == {"E5/3", "Z9"}
    assert fx["Z9"]["status"] == "rejected by cell obstruction"
    assert len(fx["Z9"]["adjacency"]) == 12 and len(fx["Z9"]["vertices"]) == 12
    assert fixture_candidates(builtin("su3-E5")) == []
    assert [c.name for c in fixture_candidates(builtin("su3-E9"))] == ["Z9"]


def test_e9_candidates(e9):
    names = [c.name for c in e9.candidates]
    assert names == ["E9", "M9", "Z9"]
    assert len(_cand(e9, "E9").blocks) == 3 and len(_cand(e9, "M9").blocks) == 3
    assert _cand(e9, "Z9").status == "rejected by cell obstruction"


def test_e9_annular_family_rigid_with_large_entries(e9):
    ring = e9.invariant.ring
    F = e9.annular["E9"]
    assert max(int(m.max()) for m in F) > 1
    assert rigidity_check(ring, F)
    assert representation_failures(ring, F) == []


def test_e9_invertible_is_order_three_permutation(e9):
    ga = e9.graph_algebras["E9"]
    G = ga.matrices
    inv = [a for a in _invertibles(G) if a != ga.unit]
    assert len(inv) == 2
    for a in inv:
        P = G[a]
        assert not np.array_equal(P, np.eye(ga.size, dtype=np.int64))
        assert np.array_equal(np.linalg.matrix_power(P, 3), np.eye(ga.size, dtype=np.int64))


def test_m9_has_no_self_fusion(e9):
    A = _cand(e9, "M9").adjacency
    for v in range(len(A)):
        with pytest.raises(NoSelfFusion):
            solve_graph_algebra(A, v)


@pytest.mark.parametrize("name", ["M9", "Z9"])
def test_e9_modules(e9, name):
    ga = e9.graph_algebras["E9"]
    P = module_family(ga, _cand(e9, name).adjacency)
    assert P.shape == (12, 12, 12) and P.min() >= 0
    assert module_failures(ga.matrices, P) == []
    a = [x for x in _invertibles(ga.matrices) if x != ga.unit][0]
    aa = int(np.argmax(ga[a][a]))
    eye = np.eye(12, dtype=np.int64)
    assert np.array_equal(np.linalg.matrix_power(P[a], 3), eye)
    assert np.array_equal(P[a] @ P[a], P[aa])
    assert int(np.trace(P[a])) == 3


def test_m9_bimodule(e9):
    ga = e9.graph_algebras["E9"]
    P = e9.modules["M9"]
    bim = bimodule_actions(ga, P)
    assert bim.solutions == 1
    cj = bim.module_conjugation
    for a in range(12):
        for b in range(12):
            for c in range(12):
                assert bim.H[a, b, c] == P[bim.rho[c]][cj[a], b]
    fixed = [a for a in range(12) if bim.rho[a] == a]
    for a in fixed:
        assert np.array_equal(bim.right[a], P[a])
    assert associativity_triple(bim.structure(ga.matrices), 12) is None


def test_broken_bimodule_reports_triple(e9):
    ga = e9.graph_algebras["E9"]
    bim = e9.bimodules["M9"]
    H = bim.H.copy()
    H[0, 0] = np.roll(H[0, 0], 1)
    broken = Bimodule(bim.left, bim.right, H, bim.rho, bim.module_conjugation)
    found = associativity_triple(broken.structure(ga.matrices), 12)
    assert found is not None and "~" in found[0]


def test_e5_dual_contains_graph_algebra(e5):
    S = e5.duals["E5"].matrices
    have = {m.tobytes() for m in S}
    assert all(G.tobytes() in have for G in e5.graph_algebras["E5"].matrices)


def test_e9_dual_contains_graph_algebra(e9):
    S = e9.duals["E9"].matrices
    have = {m.tobytes() for m in S}
    G = e9.graph_algebras["E9"].matrices
    assert all(g.tobytes() in have for g in G)


def test_dimension_rule_toy():
    F = [np.eye(2, dtype=np.int64), np.ones((2, 2), dtype=np.int64)]
    assert dimension_rule(F, np.array([2, 4])) == {"annular": 20, "dual": 20, "equal": True}
    assert dimension_rule(F, np.array([2, 3]))["equal"] is False
