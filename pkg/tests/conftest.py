import numpy as np
import pytest

from catelab.dgp import Dataset, Provenance

ACCEPTANCE_LINES = []


def make_dataset(x, a, y, z=None):
    """Wrap raw columns in a Dataset; potential outcomes mirror ``y``."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=np.int8)
    y = np.asarray(y, dtype=float)
    z = np.zeros_like(x) if z is None else np.asarray(z, dtype=float)
    return Dataset(x, z, a, y.copy(), y.copy(), y, np.zeros_like(x), Provenance(None, None, 0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
