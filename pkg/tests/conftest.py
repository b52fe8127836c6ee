import numpy as np
import pytest

from tailcluster.field import Window
from tailcluster.models import ModelSpec

# acceptance results are collected here and echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def mm():
    return ModelSpec("moving_max", alpha=1.0, coeffs=(2.0, 1.0))


@pytest.fixture(scope="session")
def ar1():
    return ModelSpec("ar1_tail_chain", alpha=1.0, phi=0.5)


@pytest.fixture(scope="session")
def br():
    return ModelSpec("brown_resnick", alpha=1.0, variogram_slope=10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def window_for(model, a=None):
    from tailcluster.cli import default_window

    return Window.cube(a or default_window(model), model.dim_l, model.grid_spacing)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
