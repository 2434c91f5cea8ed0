"""Command line interface ``modsplit``.

Exit codes: 0 success, 2 ambiguous or underdetermined, 3 inconsistent input,
4 input/output error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .chiral import ChiralError, GaugeAmbiguity
from .fusion import FusionError, build_fusion_ring, verlinde_table
from .graphs import GraphError, MultipleSolutions
from .invariants import BUILTIN_NAMES, InvariantError, ModularInvariant, builtin, load
from .linalg import IntegerOverflow
from .pipeline import STAGES, RunReport, export_dot, run
from .quantum import ClosureFailure
from .splitting import AmbiguousDecomposition, LedgerIncomplete, SplittingError

EXIT_OK, EXIT_AMBIGUOUS, EXIT_INCONSISTENT, EXIT_IO = 0, 2, 3, 4

_SUBCOMMANDS = {
    "run": "verify",
    "solve-toric": "toric",
    "generators": "generators",
    "ocneanu": "ocneanu",
    "graphs": "graphs",
    "verify": "verify",
    "export-dot": "graphs",
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--case", help=f"built-in invariant ({', '.join(BUILTIN_NAMES)})")
    src.add_argument("--input", help="JSON file with an invariant (blocks or matrix)")
    common.add_argument("--stage", help=f"last stage to run: {', '.join(STAGES)} or 1..{len(STAGES)}")
    common.add_argument("--convention", choices=("paper", "transposed"), default="paper",
                        help="use M as given or its transpose")
    common.add_argument("--out-dir", help="write report.json and timings.json (and DOT files) here")
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="modsplit", description="Modular splitting and quantum symmetries.")
    p.add_argument("--version", action="version", version=f"modsplit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "solve-toric", "generators", "ocneanu", "graphs", "verify", "export-dot"):
        sub.add_parser(name, parents=[common])
    fz = sub.add_parser("fusion", parents=[common], help="fusion ring summary and Verlinde cross-check")
    fz.add_argument("--algebra", choices=("su2", "su3"))
    fz.add_argument("--level", type=int)
    return p


def _load_invariant(args) -> ModularInvariant:
    if args.case:
        return builtin(args.case)
    if args.input:
        try:
            return load(args.input)
        except OSError as exc:
            raise CliError(f"cannot read {args.input}: {exc}", EXIT_IO) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"{args.input} is not valid JSON: {exc}", EXIT_IO) from None
    raise CliError("need --case or --input", EXIT_INCONSISTENT)


def _fusion(args) -> dict:
    if args.algebra and args.level is not None:
        ring = build_fusion_ring(args.algebra, args.level)
    else:
        ring = _load_invariant(args).ring
    T = verlinde_table(ring.algebra, ring.level)
    N = np.stack([ring.N(w) for w in ring.weights])
    return {"algebra": ring.algebra, "level": ring.level, "alcove": ring.dim,
            "weights": [list(w) for w in ring.weights],
            "verlinde_agrees": bool(np.array_equal(N, T)),
            "commutative": bool(np.array_equal(N, N.transpose(1, 0, 2))),
            "fundamental": N[ring.idx(ring.fundamentals[0])].tolist()}


def _summary(report: RunReport) -> str:
    inp = report.input
    lines = [f"{inp['name']} ({inp['algebra']} level {inp['level']}, {inp['convention']}): "
             f"d_G = {inp['d_G']}, d_O = {inp['d_O']}"]
    st = report.to_json()["stages"]
    if "toric" in st:
        prof = ", ".join(f"{c}x{m}" for m, c in sorted(st["toric"]["profile"].items(), key=lambda kv: int(kv[0])))
        lines.append(f"toric: r = {st['toric']['r']}, profile {prof}, splitting ok = {st['toric']['splitting']['ok']}")
    if "generators" in st:
        g = st["generators"]
        lines.append(f"generators: left blocks {g['left_blocks']}, C involution = {g['C_involution']}")
    if "ocneanu" in st:
        o = st["ocneanu"]
        lines.append(f"ocneanu: commutative = {o['commutative']}, centre = {o['centre_dimension']}, "
                     f"compatibility ok = {o['compatibility']['ok']}")
    if "graphs" in st:
        for c in st["graphs"]["candidates"]:
            lines.append(f"candidate {c['name']}: type {c['kind']}, {c['size']} vertices, "
                         f"{c['copies']} block(s), {c['status']}")
    if "verify" in st:
        for c in st["verify"]["candidates"]:
            if "dimension" in c:
                d = c["dimension"]
                lines.append(f"dimension {c['name']}: {d['annular']} = {d['dual']} ({'ok' if d['equal'] else 'MISMATCH'}), "
                             f"representation exact = {c['representation']}")
            else:
                lines.append(f"dimension {c['name']}: {c.get('error', 'undetermined')}")
    return "\n".join(lines) + "\n"


def _write_outputs(report: RunReport, out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            fh.write(report.dumps())
        with open(os.path.join(out_dir, "timings.json"), "w") as fh:
            fh.write(report.timings_json())
    except OSError as exc:
        raise CliError(f"cannot write to {out_dir}: {exc}", EXIT_IO) from None


def _dispatch(args) -> int:
    if args.command == "fusion":
        data = _fusion(args)
        if args.json:
            sys.stdout.write(json.dumps(data, sort_keys=True, indent=2) + "\n")
        else:
            sys.stdout.write(f"{data['algebra']} level {data['level']}: {data['alcove']} weights, "
                             f"Verlinde agrees = {data['verlinde_agrees']}\n")
        return EXIT_OK
    inv = _load_invariant(args)
    stage = args.stage or _SUBCOMMANDS[args.command]
    report, ctx = run(inv, stage=stage, convention=args.convention)
    if args.command == "export-dot":
        if ctx.graph is None:
            raise CliError("export-dot needs at least the graphs stage", EXIT_INCONSISTENT)
        try:
            written = export_dot(ctx, args.out_dir or ".")
        except ValueError as exc:
            raise CliError(str(exc), EXIT_INCONSISTENT) from None
        except OSError as exc:
            raise CliError(f"cannot write DOT files: {exc}", EXIT_IO) from None
        if not args.json:
            sys.stdout.write("".join(f"wrote {p}\n" for p in written))
    if args.out_dir and args.command != "export-dot":
        _write_outputs(report, args.out_dir)
    sys.stdout.write(report.dumps() if args.json else _summary(report))
    if args.command == "verify" and "verify" in report.stages and not report.stages["verify"]["ok"]:
        return EXIT_INCONSISTENT
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except CliError as exc:
        print(f"modsplit: {exc}", file=sys.stderr)
        return exc.code
    except (AmbiguousDecomposition, GaugeAmbiguity, MultipleSolutions, LedgerIncomplete) as exc:
        print(f"modsplit: ambiguous: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except (InvariantError, FusionError, SplittingError, ChiralError, ClosureFailure, GraphError, IntegerOverflow,
            ValueError) as exc:
        print(f"modsplit: inconsistent input: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except OSError as exc:
        print(f"modsplit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
