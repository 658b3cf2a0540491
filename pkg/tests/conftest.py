import pytest

from delaris import sweeps
from delaris.model import ModelParams, RiskAversionDist


@pytest.fixture(scope="session")
def exp_case1():
    return sweeps.baseline_params("exponential", "I")


@pytest.fixture(scope="session")
def exp_case2():
    return sweeps.baseline_params("exponential", "II")


@pytest.fixture(scope="session")
def pow_case1():
    return sweeps.baseline_params("power", "I")


@pytest.fixture(scope="session")
def pow_case2():
    return sweeps.baseline_params("power", "II")


@pytest.fixture(scope="session")
def pow_single():
    """Power baseline collapsed to a single risk aversion 0.5."""
    base = sweeps.baseline_params("power", "I")
    return ModelParams.build(
        insurance=base.insurance,
        financial=base.financial,
        delay=base.delay,
        dist=RiskAversionDist(family="power", points=((0.5, 1.0),)),
        horizon=base.horizon,
        x0=base.x0,
    )
