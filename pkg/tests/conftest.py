import numpy as np
import pytest

from decorr.scalar import ScalarLSDEModel

from .helpers import ou


@pytest.fixture
def unit_scalar():
    return ScalarLSDEModel(theta=1.0, sigma=1.0, epsilon=1e-3, sigma0_sq=1.0)


@pytest.fixture
def unit_ou1():
    return ou([[-1.0]], eps=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
