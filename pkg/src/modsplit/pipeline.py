"""End-to-end run: toric matrices, chiral generators, quantum symmetries, graphs, verification.

A run produces a :class:`RunReport` whose JSON form is deterministic (sorted
keys, stable ordering, no timings); wall-clock timings are kept in a
separate mapping.
"""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chiral import DoubleFusionFamily, GeneratorSet, expand_family, solve_generators, verify_double_fusion
from .graphs import (
    AnnularRejection, Bimodule, BimoduleFailure, CandidateGraph, DualAnnular, GraphAlgebra, GraphError,
    MultipleSolutions, NoSelfFusion, annular_family, bimodule_actions, dimension_rule, dual_annular,
    extract_candidates, fixture_candidates, module_family, representation_failures, rigidity_failures,
    solve_graph_algebra,
)
from .invariants import ModularInvariant
from .quantum import (
    OcneanuAlgebra, OcneanuGraph, assemble_graph, close_algebra, commutativity_check, triality_grading,
    verify_compatibility,
)
from .splitting import ToricLedger, build_K_family, solve_toric, verify_modular_splitting

log = logging.getLogger(__name__)

STAGES = ("toric", "generators", "ocneanu", "graphs", "verify")
REPORT_SCHEMA = 1


def stage_index(stage: str | int) -> int:
    if isinstance(stage, int) or str(stage).isdigit():
        k = int(stage)
        if not 1 <= k <= len(STAGES):
            raise ValueError(f"stage must be 1..{len(STAGES)}")
        return k - 1
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
    return STAGES.index(stage)


def worker_count() -> int:
    raw = os.environ.get("MODSPLIT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer MODSPLIT_THREADS=%r", raw)
    return os.cpu_count() or 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class RunReport:
    input: dict
    stages: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return _jsonable({"schema": REPORT_SCHEMA, "input": self.input, "stages": self.stages})

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def timings_json(self) -> str:
        return json.dumps({k: round(v, 6) for k, v in self.timings.items()}, sort_keys=True, indent=2) + "\n"


@dataclass
class RunContext:
    invariant: ModularInvariant
    ledger: ToricLedger | None = None
    generators: GeneratorSet | None = None
    family: DoubleFusionFamily | None = None
    algebra: OcneanuAlgebra | None = None
    graph: OcneanuGraph | None = None
    candidates: list[CandidateGraph] = field(default_factory=list)
    annular: dict[str, list[np.ndarray]] = field(default_factory=dict)
    graph_algebras: dict[str, GraphAlgebra] = field(default_factory=dict)
    modules: dict[str, np.ndarray] = field(default_factory=dict)
    bimodules: dict[str, Bimodule] = field(default_factory=dict)
    duals: dict[str, DualAnnular] = field(default_factory=dict)
    convention: str = "paper"

    def accepted(self) -> list[CandidateGraph]:
        return [c for c in self.candidates if not c.status.startswith("rejected: ")]


def describe(inv: ModularInvariant, convention: str) -> dict:
    return {"name": inv.name, "algebra": inv.ring.algebra, "level": inv.ring.level, "convention": convention,
            "alcove": inv.ring.dim, "d_G": inv.d_G, "d_O": inv.d_O, "matrix": inv.matrix}


def apply_convention(inv: ModularInvariant, convention: str) -> ModularInvariant:
    if convention == "paper":
        return inv
    if convention == "transposed":
        return ModularInvariant(inv.ring, inv.matrix.T.copy(), inv.name)
    raise ValueError(f"unknown convention {convention!r}")


def run(inv: ModularInvariant, *, stage: str | int = "verify", convention: str = "paper",
        workers: int | None = None) -> tuple[RunReport, RunContext]:
    inv = apply_convention(inv, convention)
    last = stage_index(stage)
    report = RunReport(describe(inv, convention))
    ctx = RunContext(inv, convention=convention)
    steps = (_toric, _generators, _ocneanu, _graphs, _verify)
    for k in range(last + 1):
        t0 = time.perf_counter()
        if k == 4:
            report.stages[STAGES[k]] = steps[k](ctx, workers or worker_count())
        else:
            report.stages[STAGES[k]] = steps[k](ctx)
        report.timings[STAGES[k]] = time.perf_counter() - t0
    return report, ctx


# --- stages ----------------------------------------------------------------------------

def _toric(ctx: RunContext) -> dict:
    inv = ctx.invariant
    K = build_K_family(inv.ring, inv)
    ledger, trace = solve_toric(K, inv.d_O)
    ctx.ledger = ledger
    split = verify_modular_splitting(ledger, K)
    return {"d_O": ledger.d_O, "r": ledger.distinct, "profile": ledger.profile(),
            "splitting": {"ok": split.ok, "pairs": split.checked, "failures": split.failures[:20]}}


def _generators(ctx: RunContext) -> dict:
    ring = ctx.invariant.ring
    gens = solve_generators(ring, ctx.ledger)
    ctx.generators = gens
    ctx.family = expand_family(gens)
    df = verify_double_fusion(ctx.family, ctx.ledger)
    graph = OcneanuGraph({k: v for k, v in gens.generators().items()}, list(map(int, gens.C)),
                         [str(z) for z in range(gens.d_O)])
    left = "L(1,0)" if ring.algebra == "su3" else "L(1)"
    blocks = graph.components([left])
    return {"C": list(map(int, gens.C)), "C_involution": gens.is_involution(),
            "left_blocks": [len(b) for b in blocks], "left_block_slots": blocks,
            "search": gens.stages, "choices": len(gens.alternatives),
            "double_fusion": {"ok": df.ok, "failures": {k: v[:20] for k, v in sorted(df.failures.items())}}}


def _ocneanu(ctx: RunContext) -> dict:
    gens, fam = ctx.generators, ctx.family
    algebra = close_algebra(gens, fam)
    ctx.algebra = algebra
    ctx.graph = assemble_graph(algebra, gens)
    compat = verify_compatibility(algebra, fam, ctx.ledger)
    comm = commutativity_check(algebra, ctx.ledger)
    grading = triality_grading(ctx.graph, ctx.invariant.ring.algebra)
    return {"d_O": algebra.d_O, "generators": algebra.generators, "closure": dict(sorted(algebra.stats.items())),
            "compatibility": {"ok": compat.ok, "failures": {k: v[:20] for k, v in sorted(compat.failures.items())}},
            "commutative": comm["commutative"], "toric_rank": comm["toric_rank"], "commutativity_agrees": comm["agrees"],
            "centre_dimension": algebra.centre_dimension(),
            "grading": {k: v is not None for k, v in grading.items()}}


def _graphs(ctx: RunContext) -> dict:
    ring = ctx.invariant.ring
    cands = extract_candidates(ctx.graph, ring) + fixture_candidates(ctx.invariant)
    ctx.candidates = cands
    out = []
    parent: CandidateGraph | None = None
    for cand in cands:
        entry: dict = {"name": cand.name, "kind": cand.kind, "size": cand.size, "copies": len(cand.blocks),
                       "source": cand.source, "labels": cand.labels, "adjacency": cand.adjacency}
        try:
            F = annular_family(ring, cand.adjacency)
        except AnnularRejection as exc:
            cand.status = f"rejected: negative annular entry at {exc.weight}"
            entry.update(status=cand.status, annular={"ok": False, "first_failure": list(exc.weight)})
            out.append(entry)
            continue
        ctx.annular[cand.name] = F
        entry["annular"] = {"ok": True, "representation_failures": len(representation_failures(ring, F))}
        entry["rigid"] = not rigidity_failures(ring, F)
        entry.update(_self_fusion(ctx, cand))
        if cand.kind == "I" and parent is None and cand.name in ctx.graph_algebras:
            parent = cand
        entry["status"] = cand.status
        out.append(entry)
    if parent is not None:
        ga = ctx.graph_algebras[parent.name]
        for cand, entry in zip(cands, out):
            if cand is parent or cand.kind != "II" or cand.status.startswith("rejected: "):
                continue
            entry["module"] = _module_entry(ctx, parent, ga, cand)
    return {"candidates": out, "names": [c.name for c in cands],
            "accepted": [c.name for c in ctx.accepted()]}


def _self_fusion(ctx: RunContext, cand: CandidateGraph) -> dict:
    if cand.unit is not None:
        try:
            ga = solve_graph_algebra(cand.adjacency, cand.unit)
        except MultipleSolutions as exc:
            return {"self_fusion": {"ok": False, "error": str(exc), "solutions": len(exc.solutions)}}
        except NoSelfFusion as exc:
            return {"self_fusion": {"ok": False, "error": str(exc)}}
        ctx.graph_algebras[cand.name] = ga
        return {"self_fusion": {"ok": True, "unit": ga.unit, "generator": ga.generator,
                                "raw_solutions": ga.raw_solutions, "commutative": True}}
    units = []
    for v in range(cand.size):
        try:
            solve_graph_algebra(cand.adjacency, v)
            units.append(v)
        except (NoSelfFusion, MultipleSolutions):
            continue
    return {"self_fusion": {"ok": bool(units), "units": units}}


def _module_entry(ctx: RunContext, parent: CandidateGraph, ga: GraphAlgebra, cand: CandidateGraph) -> dict:
    try:
        P = module_family(ga, cand.adjacency)
    except GraphError as exc:
        return {"over": parent.name, "ok": False, "error": str(exc)}
    ctx.modules[cand.name] = P
    invertible = [a for a in range(ga.size) if a != ga.unit and ga[a].sum() == ga.size and (ga[a].sum(1) == 1).all()]
    fixed = {str(a): int(np.trace(P[a])) for a in invertible}
    entry = {"over": parent.name, "ok": True, "invertible_fixed_points": fixed}
    if cand.kind == "II" and cand.source == "ocneanu":
        try:
            bim = bimodule_actions(ga, P)
        except BimoduleFailure as exc:
            entry["bimodule"] = {"ok": False, "pattern": exc.pattern, "triple": list(exc.triple)}
        else:
            ctx.bimodules[cand.name] = bim
            entry["bimodule"] = {"ok": True, "rho": bim.rho, "conjugation": bim.module_conjugation,
                                 "solutions": bim.solutions}
    return entry


def _verify(ctx: RunContext, workers: int) -> dict:
    accepted = ctx.accepted()

    def one(cand: CandidateGraph):
        try:
            return cand, dual_annular(ctx.algebra, ctx.generators, ctx.family, cand), None
        except GraphError as exc:
            return cand, None, str(exc)

    if workers > 1 and len(accepted) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(accepted))) as pool:
            results = list(pool.map(one, accepted))
    else:
        results = [one(c) for c in accepted]
    out = []
    for cand, dual, err in results:
        entry = {"name": cand.name, "status": cand.status}
        if dual is None:
            entry.update(ok=False, error=err)
            out.append(entry)
            continue
        ctx.duals[cand.name] = dual
        stats = {k: v for k, v in sorted(dual.stats.items()) if k != "seconds"}
        entry.update(ok=dual.matrices is not None, right_action=dual.right, twist=dual.twist,
                     nullity=dual.nullity, solutions=dual.solutions, search=stats,
                     representation=dual.matrices is not None)
        if dual.sums is not None:
            entry["dimension"] = dimension_rule(ctx.annular[cand.name], dual.sums)
            entry["d_x"] = dual.sums
        out.append(entry)
    sums = {e["name"]: e["dimension"]["dual"] for e in out if "dimension" in e}
    return {"candidates": out, "dimension_sums": sums,
            "ok": all(e.get("ok") and e.get("dimension", {}).get("equal", False) for e in out)}


# --- DOT export ---------------------------------------------------------------------------

def candidate_dot(cand: CandidateGraph) -> str:
    if cand.labels:
        labels = cand.labels
    elif cand.blocks:
        labels = [str(s) for s in cand.blocks[0]]
    else:
        labels = [str(v) for v in range(cand.size)]
    name = cand.name.replace("/", "_")
    lines = [f'digraph "{name}" {{']
    for v, lab in enumerate(labels):
        lines.append(f'  {v} [label="{lab}"];')
    A = cand.adjacency
    for a, b in np.argwhere(A > 0):
        m = int(A[a, b])
        extra = f', mult={m}, label="{m}"' if m > 1 else ""
        lines.append(f'  {a} -> {b} [generator="fundamental"{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(ctx: RunContext, out_dir: str) -> list[str]:
    """Write the Ocneanu graph and every accepted candidate as DOT files, each
    tagged with the chiral convention of the run. An empty candidate list is an
    error and nothing is written."""
    cands = ctx.accepted()
    if not cands:
        raise ValueError("no candidate graphs to export")
    files = {"ocneanu.dot": ctx.graph.to_dot()}
    for cand in cands:
        files[f"graph-{cand.name.replace('/', '_')}.dot"] = candidate_dot(cand)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(f"// convention: {ctx.convention}\n" + files[name])
        written.append(path)
    return written
