import numpy as np
import pytest

from povmdiscord.paperstate import build_state
from povmdiscord.qmath import TwoQubitState, random_density_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def half_state():
    return build_state(0.5)


@pytest.fixture
def product_state(rng):
    return TwoQubitState.product(random_density_matrix(rng, 2), random_density_matrix(rng, 2))
