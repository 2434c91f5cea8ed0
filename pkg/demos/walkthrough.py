"""Walk through the pipeline on the exceptional su(3) invariants.

For each case: the toric matrices found from the modular splitting equation,
the chiral generators, the quantum symmetry algebra, the candidate graphs
read off its left chiral blocks, and the dimension rule checked on the dual
annular matrices of every candidate.

Run:  python demos/walkthrough.py [case ...]
"""
from __future__ import annotations

import sys

from modsplit.invariants import builtin
from modsplit.pipeline import run


def narrate(case: str) -> None:
    report, ctx = run(builtin(case))
    st = report.stages
    inp = report.input
    print(f"== {case}: su(3) level {inp['level']}, {inp['alcove']} integrable weights")
    print(f"   d_G = Tr M = {inp['d_G']}, d_O = Tr MM^T = {inp['d_O']}")
    t = st["toric"]
    prof = ", ".join(f"{c} of multiplicity {m}" for m, c in t["profile"].items())
    print(f"   {t['r']} distinct toric matrices ({prof}); splitting equation holds on "
          f"{t['splitting']['pairs']} pairs: {t['splitting']['ok']}")
    g = st["generators"]
    print(f"   left generator splits into blocks of sizes {g['left_blocks']}; "
          f"chiral conjugation is an involution: {g['C_involution']}")
    o = st["ocneanu"]
    print(f"   quantum symmetries: {o['d_O']} matrices, commutative = {o['commutative']}, "
          f"centre dimension {o['centre_dimension']}")
    for c in st["graphs"]["candidates"]:
        sf = c.get("self_fusion", {})
        line = f"   candidate {c['name']} ({c['size']} vertices, {c['copies'] or 'fixture'} block(s)): {c['status']}"
        if sf:
            line += f"; self-fusion {'found' if sf['ok'] else 'absent'}"
        if "module" in c:
            line += f"; module over {c['module']['over']}"
        print(line)
    for c in st["verify"]["candidates"]:
        if "dimension" in c:
            d = c["dimension"]
            print(f"   dimension rule on {c['name']}: {d['annular']} = {d['dual']} ({'ok' if d['equal'] else 'FAILS'})")
    print()


def main(argv: list[str]) -> None:
    for case in argv or ["su3-E5", "su3-E5-conj", "su3-E9"]:
        narrate(case)


if __name__ == "__main__":
    main(sys.argv[1:])
