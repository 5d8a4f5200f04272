import numpy as np
import pytest

from qsup.config import RunConfig
from qsup.dispersion import load_dispersion
from qsup.interferometer import default_grid


@pytest.fixture(scope="session")
def registry():
    return load_dispersion()


@pytest.fixture(scope="session")
def geometry(registry):
    """Default geometry (cut phase-matched at 743 nm, L_a = -8.75 mm)."""
    return RunConfig.from_dict({}).geometry(registry)


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def small_grid():
    return np.linspace(733.0, 743.0, 801), np.linspace(-1.0, 1.0, 81)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
