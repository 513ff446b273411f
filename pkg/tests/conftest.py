import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

from glimm_escape import euler  # noqa: E402


@pytest.fixture
def gas():
    return euler.GasConstants(gamma=1.4)


@pytest.fixture
def planet():
    return euler.GasConstants(gamma=1.4, G_Mp=0.5, cross_section=0.115)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_states(rng, n, gamma=1.4, u_range=(-2.0, 2.0)):
    rho = rng.uniform(0.1, 5.0, n)
    u = rng.uniform(*u_range, n)
    P = rng.uniform(0.1, 5.0, n)
    return np.stack([rho, rho * u, P / (gamma - 1.0) + 0.5 * rho * u * u], axis=-1)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
