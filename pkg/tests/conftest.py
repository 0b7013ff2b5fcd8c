"""
Shared fixtures: seeded generators and the model spaces used across suites
"""

import numpy as np
import pytest

from emcheck.manifold import ModelSpace


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def r3():
    return ModelSpace.euclidean(3)


@pytest.fixture
def r4():
    return ModelSpace.euclidean(4)


@pytest.fixture
def r5():
    return ModelSpace.euclidean(5)


@pytest.fixture
def h2():
    return ModelSpace.hyperbolic(2, 1.0)


@pytest.fixture
def h3():
    return ModelSpace.hyperbolic(3, 1.0)
