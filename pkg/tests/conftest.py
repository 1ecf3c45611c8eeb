import numpy as np
import pytest

from gaugekit import Grid


@pytest.fixture
def grid16():
    return Grid(16, 16.0)


@pytest.fixture
def grid24():
    return Grid(24, 24.0)


@pytest.fixture
def grid32():
    return Grid(32, 32.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
