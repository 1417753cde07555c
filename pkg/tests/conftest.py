import functools

import numpy as np
import pytest

from prolate import oxr
from prolate.phase import build_evaluator


@functools.lru_cache(maxsize=None)
def evaluator(gamma, n):
    return build_evaluator(gamma, n)


@functools.lru_cache(maxsize=None)
def expansion(gamma, n):
    return oxr.ps_expansion(gamma, n)


@pytest.fixture(scope="session")
def get_evaluator():
    return evaluator


@pytest.fixture(scope="session")
def get_expansion():
    return expansion


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one summary line per acceptance criterion."""

    def record(criterion: int, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
