import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from orliczlab import Box, PhiFunction
from orliczlab import exponent_fields as ef

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

UNIT1 = Box((0.0,), (1.0,))
UNIT2 = Box.unit(2)


def const_phi(p, q, box=UNIT2, n=None):
    return PhiFunction(ef.constant(p, box, "p"), ef.constant(q, box, "q", "loglog_holder"),
                       box.dim if n is None else n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
