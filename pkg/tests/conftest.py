import numpy as np
import pytest

from nestlab.linalg import Tolerances
from nestlab.nests import nest_from_flag, standard_nest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def line_nests(s):
    """The pair {0, C e1, C^2} and {0, C (c, s), C^2} with c = sqrt(1 - s^2)."""
    c = np.sqrt(1.0 - s * s)
    return standard_nest((0, 1, 2)), nest_from_flag((0, 1, 2), np.array([[c, -s], [s, c]]))


@pytest.fixture
def orthogonal_lines():
    return standard_nest((0, 1, 2)), nest_from_flag((0, 1, 2), np.array([[0.0, 1.0], [1.0, 0.0]]))
