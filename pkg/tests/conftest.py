import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robustloc import AnchorSet

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_anchors(rng, m, r=2, spread=400.0):
    """Generic anchor set; the last anchor is central."""
    return AnchorSet(rng.uniform(-spread, spread, (m, r)), central_index=m - 1)


@pytest.fixture
def square_anchors():
    return AnchorSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), central_index=0)


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    """Log one acceptance criterion; the lines are printed after the run."""
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
