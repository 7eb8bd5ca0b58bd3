import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rotation(alpha=0.0):
    return np.array([[0.0, 1.0 - alpha], [-1.0, 0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
