import numpy as np
import pytest

SEED = 20240101


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)
