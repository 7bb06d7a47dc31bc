import numpy as np
import pytest

from ratnet.rational import SAFE, RationalFunction


def central_diff(f, x, h=1e-5):
    """Central finite-difference derivative, the independent gradient oracle."""
    return (f(x + h) - f(x - h)) / (2.0 * h)


def random_rational(rng, m, n, variant=SAFE, scale=1.0):
    num = rng.uniform(-scale, scale, m + 1)
    if variant == SAFE:
        den = rng.uniform(-scale, scale, n)
    else:
        den = rng.uniform(-scale, scale, n + 1)
        # keep the constant term away from zero so the function is not one
        # global near-pole; raw rationals are normally normalized to b_0 = 1
        den[0] = (0.5 + abs(den[0])) * (1.0 if rng.random() < 0.5 else -1.0)
    return RationalFunction(num, den, variant)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
