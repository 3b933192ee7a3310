import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ballmax.geometry import BallSet, Instance

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def four_disk():
    """Four overlapping disks; y* = (0.615, 0.605) with three pieces active."""
    return Instance(BallSet([[0, 0], [1, 0], [0, 1], [1, 1]], [1.2, 1.1, 1.3, 1.0]), [0.5, 0.4], 0.5)


@pytest.fixture
def lens():
    return Instance(BallSet([[-0.5, 0.0], [0.5, 0.0]], [1.0, 1.0]), [0.0, 0.0], 0.5)


def single(center, radius, c0, lam=0.5):
    return Instance(BallSet([center], [radius]), c0, lam)
