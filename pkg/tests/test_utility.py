import math

import numpy as np
import pytest

from delaris.exceptions import DomainError
from delaris.utility import (
    EXPONENTIAL,
    POWER,
    inverse_utility,
    inverse_utility_d1,
    inverse_utility_d2,
    utility,
)


def test_exponential_point_values():
    # u(w) = -exp(-gamma w)/gamma at gamma=0.5, w=0.6
    assert utility(EXPONENTIAL, 0.5, 0.6) == pytest.approx(
        -math.exp(-0.3) / 0.5, rel=1e-15
    )
    y = utility(EXPONENTIAL, 0.5, 0.6)
    assert inverse_utility(EXPONENTIAL, 0.5, y) == pytest.approx(0.6, rel=1e-14)


def test_power_point_values():
    assert utility(POWER, 0.5, 0.81) == pytest.approx(2 * math.sqrt(0.81), rel=1e-15)
    y = utility(POWER, 0.9, 1.7)
    assert inverse_utility(POWER, 0.9, y) == pytest.approx(1.7, rel=1e-13)


@pytest.mark.parametrize("family,gamma", [
    (EXPONENTIAL, 0.5), (EXPONENTIAL, 0.9), (POWER, 0.5), (POWER, 0.9),
])
def test_inverse_roundtrip_many(family, gamma):
    rng = np.random.default_rng(7)
    w = rng.uniform(0.05, 3.0, size=200)
    y = utility(family, gamma, w)
    back = inverse_utility(family, gamma, y)
    np.testing.assert_allclose(back, w, rtol=1e-12)


@pytest.mark.parametrize("family,gamma", [
    (EXPONENTIAL, 0.5), (EXPONENTIAL, 0.9), (POWER, 0.5), (POWER, 0.9),
])
def test_inverse_derivatives_match_finite_differences(family, gamma):
    rng = np.random.default_rng(11)
    w = rng.uniform(0.2, 2.0, size=50)
    y = utility(family, gamma, w)
    step = 1e-6 * np.maximum(1.0, np.abs(y))
    d1_fd = (inverse_utility(family, gamma, y + step)
             - inverse_utility(family, gamma, y - step)) / (2 * step)
    d1 = inverse_utility_d1(family, gamma, y)
    np.testing.assert_allclose(d1, d1_fd, rtol=5e-8)
    d2_fd = (inverse_utility_d1(family, gamma, y + step)
             - inverse_utility_d1(family, gamma, y - step)) / (2 * step)
    np.testing.assert_allclose(inverse_utility_d2(family, gamma, y), d2_fd, rtol=5e-7)


def test_utility_monotone_increasing():
    w = np.linspace(0.05, 4.0, 300)
    for family, gamma in ((EXPONENTIAL, 0.3), (EXPONENTIAL, 0.95), (POWER, 0.2), (POWER, 0.99)):
        u = utility(family, gamma, w)
        assert np.all(np.diff(u) > 0)


def test_domain_violations():
    with pytest.raises(DomainError):
        inverse_utility(EXPONENTIAL, 0.5, 0.1)  # exp utility is negative-valued
    with pytest.raises(DomainError):
        utility(POWER, 0.5, -1.0)
    with pytest.raises(DomainError):
        inverse_utility(POWER, 0.5, -0.3)
    with pytest.raises(DomainError):
        utility("cubic", 0.5, 1.0)


def test_scalar_in_scalar_out():
    out = utility(EXPONENTIAL, 0.5, 0.6)
    assert isinstance(out, float)
    arr = utility(EXPONENTIAL, 0.5, np.array([0.5, 0.6]))
    assert isinstance(arr, np.ndarray) and arr.shape == (2,)
