import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from affine_entropy import catalog

settings.register_profile("pkg", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")


@pytest.fixture(params=["rn:2", "heis3", "aff2"])
def table(request):
    return catalog.get_algebra(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
