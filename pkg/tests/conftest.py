import numpy as np
import pytest

from phdae.ics import load_initial_state
from phdae.model import GeneratorModel
from phdae.params import fbm_ssr


@pytest.fixture(scope="session")
def params():
    return fbm_ssr()


@pytest.fixture(scope="session")
def model(params):
    return GeneratorModel(params)


@pytest.fixture(scope="session")
def ics(model):
    """(full, reduced) benchmark initial states as printed."""
    return load_initial_state("paper-ics", model)


@pytest.fixture(scope="session")
def consistent_ics(model):
    return load_initial_state("paper-ics", model, consistent=True)


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))
