import numpy as np
import pytest
from hypothesis import settings

from wallsens import Grid, validation_case
from wallsens.wall import BoundarySignals, DimensionlessProblem, Signal

settings.register_profile("wallsens", max_examples=25, deadline=None)
settings.load_profile("wallsens")


@pytest.fixture(scope="session")
def problem():
    return validation_case()


@pytest.fixture(scope="session")
def short_grid():
    return Grid(0.02, 2e-3, 1.0)


def constant_problem(uL=0.3, uR=0.3, g=0.0, u0=None, k=(0.1, 0.3), c=(0.2, 0.5), Bi=(0.1, 0.2)):
    """Two-layer slab under constant air temperatures."""
    bs = BoundarySignals(Signal.constant(uL), Signal.constant(uR), Signal.constant(g))
    return DimensionlessProblem((0.6,), k, c, Fo=0.02, Bi_L=Bi[0], Bi_R=Bi[1], boundary=bs,
                                u0=uL if u0 is None else u0)


@pytest.fixture
def equilibrium():
    return constant_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
