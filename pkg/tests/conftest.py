import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lek.geometry import Box, Disk, Interval, Polygon

settings.register_profile(
    "lek", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("lek")


@pytest.fixture
def square():
    return Box((-1.0, -1.0), (1.0, 1.0))


@pytest.fixture
def unit_disk():
    return Disk((0.0, 0.0), 1.0)


@pytest.fixture
def interval():
    return Interval(-1.0, 1.0)


@pytest.fixture
def triangle():
    return Polygon([(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Context manager factory: ``with criterion(n, title, budget_s): ...``."""
    store = request.config.stash[ACCEPTANCE]

    @contextmanager
    def record(n, title, budget=None):
        t0 = time.perf_counter()
        ok = False
        try:
            yield
            elapsed = time.perf_counter() - t0
            assert budget is None or elapsed < budget, f"runtime {elapsed:.2f}s over {budget}s"
            ok = True
        finally:
            elapsed = time.perf_counter() - t0
            line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f}s)"
            store.append((n, line))
            print(line)

    return record
