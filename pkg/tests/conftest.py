import numpy as np
import pytest

from plateopt.grid import build_cartesian_grid, build_radial_grid

ACCEPTANCE_LINES = []


def report(line: str) -> None:
    """Record a criterion verdict; printed in the terminal summary."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def disk():
    return build_radial_grid(1.0, 200)


@pytest.fixture(scope="session")
def square():
    return build_cartesian_grid(1.0, 1.0, 32, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
