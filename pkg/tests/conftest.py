import numpy as np
import pytest

from atomlens.core import MaskParams


@pytest.fixture
def thin_red():
    return MaskParams(1.92e5, 6e-4, -0.125)


@pytest.fixture
def thick_blue():
    return MaskParams(4e4, 0.01, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
