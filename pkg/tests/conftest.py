import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from psqha.grid import PSGrid

settings.register_profile(
    "psqha",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("psqha")


@pytest.fixture(scope="session")
def grid():
    return PSGrid()


@pytest.fixture(scope="session")
def small_grid():
    return PSGrid(-8.0, 8.0, -8.0, 8.0, 64, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
