import matplotlib

matplotlib.use("Agg")

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("suite")


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)
