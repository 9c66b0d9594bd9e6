import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gadkit.polycore import Poly, parse_poly

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

OBSTRUCTION_TEXT = (
    "24*x0^3 + 70*x0^2*x1 + 75*x0^2*x2 + 70*x0^2*x3 + 180*x0^2*x4 + 10*x0^2*x5"
    " + 10*x0*x1^2 + 70*x0*x2^2 + 360*x0*x2*x3 + 120*x0*x2*x4 + 60*x0*x3^2"
    " + 60*x2^3 + 60*x2^2*x3"
)


def variables(nvars):
    return [Poly.var(nvars, i) for i in range(nvars)]


def waring_form():
    x0, x1, x2 = variables(3)
    return -3 * (x0 + 2 * x1 + 2 * x2) ** 4 + (x0 + x1 + x2) ** 4 + (x0 + 3 * x1 - x2) ** 4


def multiple_points_form():
    x0, x1, x2 = variables(3)
    return x0**3 * x1 * x2 + (x0 + 0.5 * x1 + 2 * x2) ** 4 * (x0 + x2)


def obstruction_form():
    return parse_poly(OBSTRUCTION_TEXT)


@pytest.fixture
def f_waring():
    return waring_form()


@pytest.fixture
def f_multiple():
    return multiple_points_form()


@pytest.fixture
def f_obstruction():
    return obstruction_form()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rel_coeff_error(p, q):
    """Euclidean coefficient distance relative to ``|q|``."""
    return (p - q).norm() / max(q.norm(), 1e-300)
