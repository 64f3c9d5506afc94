import math

import pytest

from params import ModelParams

# (a, a*, f, theta) with alpha = i a, alpha* = i a*, phi = i f
IMAGINARY_TUPLES = [
    (1.3, 2.1, 0.17, 0.4),
    (1.7, 1.9, 0.13, -0.7),
    (1.2, 2.3, 0.15, 1.3),
    (1.9, -1.6, 0.11, 2.1),
    (1.45, 1.85, 0.19, 0.0),
]

EXAMPLE = ModelParams(N=2, alpha=1j * math.pi / 3, alpha_star=1j * math.pi / 5, phi=1j * math.pi / 7, theta=0.4)


def imaginary_params(N, a, a_star, f, theta):
    return ModelParams(N=N, alpha=1j * a, alpha_star=1j * a_star, phi=1j * f, theta=theta)


@pytest.fixture(params=IMAGINARY_TUPLES, ids=lambda t: "a={}_as={}_f={}_t={}".format(*t))
def make_params(request):
    """Factory N -> ModelParams for one generic imaginary tuple."""
    return lambda N: imaginary_params(N, *request.param)


@pytest.fixture
def make_complex_params():
    return lambda N: ModelParams(N=N, alpha=0.3 + 1.3j, alpha_star=-0.2 + 2.0j, phi=0.17j, theta=0.4)


@pytest.fixture
def example_params():
    return EXAMPLE
