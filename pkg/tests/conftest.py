import numpy as np
import pytest

from cdsdr.models import SimModelSpec, generate
from cdsdr.preprocess import standardize


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def model1_small():
    ds, b = generate(SimModelSpec(1, 200, 10, seed=3))
    return ds, b, standardize(ds)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
