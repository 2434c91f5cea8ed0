from __future__ import annotations

import time

import pytest

from modsplit.invariants import builtin
from modsplit.pipeline import run

_RUNS: dict[tuple[str, str], tuple] = {}
ACCEPTANCE_LINES: dict[int, str] = {}


def cached_run(case: str, stage: str = "verify"):
    """Pipeline run shared across the session: (report, context, seconds)."""
    key = (case, stage)
    if key not in _RUNS:
        t0 = time.perf_counter()
        report, ctx = run(builtin(case), stage=stage)
        _RUNS[key] = (report, ctx, time.perf_counter() - t0)
    return _RUNS[key]


@pytest.fixture(scope="session")
def pipeline():
    return cached_run


@pytest.fixture(scope="session")
def e5(pipeline):
    return pipeline("su3-E5")[1]


@pytest.fixture(scope="session")
def e5_conj(pipeline):
    return pipeline("su3-E5-conj")[1]


@pytest.fixture(scope="session")
def e9(pipeline):
    return pipeline("su3-E9")[1]


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""

    def record(k: int, ok: bool, seconds: float, limit: float | None, detail: str) -> None:
        timely = limit is None or seconds < limit
        bound = f" < {limit:g}s" if limit is not None else ""
        status = "PASS" if ok and timely else "FAIL"
        line = f"criterion {k:2d}: {status}  {detail}  [{seconds:.2f}s{bound}]"
        ACCEPTANCE_LINES[k] = line
        print(line)
        assert ok, line
        assert timely, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
