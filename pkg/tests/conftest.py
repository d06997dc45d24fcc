import numpy as np
import pytest

from dqptwalk.lattice import MomentumGrid, TimeGrid

# one-line verdicts from the acceptance suite, echoed after the run
ACCEPTANCE_LINES = []


def record(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def circular_match(found, expected, tol):
    """Match two momentum sets on the circle, else return the offending pair."""
    found = sorted(float(x) for x in found)
    expected = sorted(float(x) for x in expected)
    if len(found) != len(expected):
        return f"count {len(found)} != {len(expected)}"
    used = [False] * len(expected)
    for f in found:
        hit = None
        for j, e in enumerate(expected):
            if used[j]:
                continue
            d = abs((f - e + np.pi) % (2 * np.pi) - np.pi)
            if d < tol:
                hit = j
                break
        if hit is None:
            return f"{f / np.pi:.5f}pi unmatched"
        used[hit] = True
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def kgrid():
    return MomentumGrid(64)


@pytest.fixture
def tgrid():
    return TimeGrid(7.0, 0.1)
