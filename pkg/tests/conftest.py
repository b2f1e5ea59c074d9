import numpy as np
import pytest

from gtd.rng import SplitMix64
from gtd.systems import ideal_gas, van_der_waals


@pytest.fixture
def ideal():
    return ideal_gas()


@pytest.fixture
def vdw():
    return van_der_waals()


def seeded_points(seed, count, bounds):
    return SplitMix64(seed).points(count, bounds)


# regions where both built-ins are well inside their domains
IDEAL_BOUNDS = [(0.1, 10.0), (0.1, 10.0)]
VDW_BOUNDS = [(0.5, 5.0), (0.5, 5.0)]


def rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report(number, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
