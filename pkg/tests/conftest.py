import numpy as np
import pytest

from spinline.meanfield.model import MFParams
from spinline.transmission.models import CouplingModel

# DPPH-like chain parameters used across the low-temperature checks
J_CHAIN = 0.7
EPSILON = -0.086
G_FACTOR = 2.004


@pytest.fixture
def coupling_model() -> CouplingModel:
    return CouplingModel()


@pytest.fixture
def chain_params() -> MFParams:
    return MFParams(J=J_CHAIN, epsilon=EPSILON, g=G_FACTOR)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
