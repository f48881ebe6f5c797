"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

import os
from collections import OrderedDict

import numpy as np
import pytest

from bellforge.quantum import state_from_amplitudes

ACCEPTANCE_TITLES = {
    1: "exact classical bounds",
    2: "vertex count and tightness ranks",
    3: "4x4x2 family structure",
    4: "two-party criterion",
    5: "GHZ results",
    6: "W results",
    7: "Psi results",
    8: "quantum maximum vs criterion cross-check",
    9: "invariant suites",
}

_outcomes: "OrderedDict[int, list[str]]" = OrderedDict((k, []) for k in ACCEPTANCE_TITLES)


def pytest_configure(config):
    os.environ.setdefault("BELLFORGE_THREADS", "1")


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance_id", None)
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes[marker].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        report.acceptance_id = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    seen = {k: v for k, v in _outcomes.items() if v}
    if not seen:
        return
    terminalreporter.section("acceptance criteria")
    for k, results in seen.items():
        ok = all(r == "passed" for r in results)
        terminalreporter.write_line(
            f"criterion {k}: {'PASS' if ok else 'FAIL'}  {ACCEPTANCE_TITLES[k]} "
            f"({results.count('passed')}/{len(results)} checks)"
        )


def random_pure_state(n: int, rng: np.random.Generator):
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return state_from_amplitudes(n, amps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
