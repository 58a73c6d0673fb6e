import numpy as np
import pytest

from confsym import scattering
from confsym.dynamics import registry_get


@pytest.fixture(scope="session")
def coupled():
    return registry_get("coupled_test")


@pytest.fixture(scope="session")
def channel(coupled):
    return scattering.coupled_channel(coupled)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
