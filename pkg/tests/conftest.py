import numpy as np
import pytest

from holocap.capacity import CapacityConfig, capacity, planar_capacity
from holocap.qubit import QubitChannel

FOUR_STATE = QubitChannel(0.6, 0.601, 0.5, 0.021, 0.0, 0.495)


@pytest.fixture(scope="session")
def four_state():
    return FOUR_STATE


@pytest.fixture(scope="session")
def four_result():
    return capacity(FOUR_STATE, CapacityConfig(seed=0))


@pytest.fixture(scope="session")
def planar_result():
    return planar_capacity(FOUR_STATE, "xz")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
