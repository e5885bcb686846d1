import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stablecones.cones import ConeSpec, make_cone

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GRID = np.linspace(0.0, 10.0, 11)


@pytest.fixture
def euclid2():
    return make_cone(ConeSpec("euclidean-sum", dim=2))


@pytest.fixture
def max_cone():
    return make_cone(ConeSpec("max-grid", grid=GRID))


@pytest.fixture
def time_cone():
    return make_cone(ConeSpec("time-stable", grid=GRID))


@pytest.fixture
def measure_cone():
    return make_cone(ConeSpec("atomic-measure", dim=1))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request):
    """Record one pass/fail line for an acceptance criterion; shown in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(k, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {k}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
