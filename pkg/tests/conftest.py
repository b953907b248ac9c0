import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from statusnet.graph import CommGraph, StatusLabels

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def chorded_c4():
    # 4-cycle 0-1-2-3 with chord {0, 2}
    return CommGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])


@pytest.fixture
def k4():
    return CommGraph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])


@pytest.fixture
def star10():
    """Center 0 is the manager, leaves 1..9 are subordinates."""
    g = CommGraph.from_edges(10, [(0, i) for i in range(1, 10)])
    return g, StatusLabels([0] + [1] * 9)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, printed as one line per criterion at the end of the run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def accept():
    def record(key, ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        print(f"criterion {key}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abcdefgh")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
