import math

import pytest
from hypothesis import HealthCheck, settings

from landau_res.model import AxisGaussian, Gaussian, make_config

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT2 = math.sqrt(2.0)


def gauss_cfg(eps=0.05, q=0, sign=1, **kw):
    """The workhorse profile: U = exp(-rho^2/4), g = exp(-x^2/2)."""
    return make_config(q=q, radial=Gaussian(0.25), axis=AxisGaussian(0.5), coupling=eps, sign=sign, **kw)


@pytest.fixture
def cfg():
    return gauss_cfg()


@pytest.fixture
def cfg_q1():
    return gauss_cfg(q=1)
