import numpy as np
import pytest
from hypothesis import settings

from arrival_povm.families import two_point_family
from arrival_povm.time_distributions import TimeGrid

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid10():
    return TimeGrid(0.0, 1.0, 10)


@pytest.fixture
def two_point(grid10):
    return two_point_family(grid10, 3, 7)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
