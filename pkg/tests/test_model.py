import dataclasses
import math

import numpy as np
import pytest

from delaris.exceptions import ParameterError
from delaris.model import (
    DelayParams,
    FinancialParams,
    InsuranceParams,
    ModelParams,
    RiskAversionDist,
    derive_coeffs,
    kappa_closed_form,
    solve_delay_constants,
)

BASE_FIN = FinancialParams(r=0.1, mu=0.2, sigma=0.6)
BASE_DELAY = DelayParams(alpha=0.5, beta=0.05, h=2.0)


def test_diffusion_coefficients():
    co = derive_coeffs(InsuranceParams(lambda1=1.0, mu1=0.1, mu2=0.2, eta1=0.3, eta2=0.5))
    assert co.a == pytest.approx(0.1, rel=1e-15)
    assert co.b == pytest.approx(math.sqrt(0.2), rel=1e-15)
    assert co.b2 == pytest.approx(0.2, rel=1e-15)
    assert co.eta == pytest.approx(-0.2, rel=1e-15)
    assert co.eta2 == 0.5


def test_delay_constants_benchmark_values():
    # independently evaluated at 50-digit precision from the closed forms
    cons = solve_delay_constants(BASE_FIN, BASE_DELAY)
    assert cons.C == pytest.approx(0.018393972058572116, rel=1e-14)
    assert cons.B == pytest.approx(0.030076477521020375, rel=1e-14)
    assert cons.A == pytest.approx(0.051529550420407508, rel=1e-14)
    assert cons.kappa == pytest.approx(0.10152955042040751, rel=1e-14)


def test_closure_identities_random_draws():
    rng = np.random.default_rng(20240814)
    for _ in range(200):
        r = rng.uniform(0.01, 0.3)
        alpha = rng.uniform(0.0, 2.0)
        beta = rng.uniform(0.0, 1.0)
        h = rng.uniform(0.1, 5.0)
        fin = FinancialParams(r=r, mu=r + 0.1, sigma=0.5)
        delay = DelayParams(alpha=alpha, beta=beta, h=h)
        cons = solve_delay_constants(fin, delay)
        decay = math.exp(-alpha * h)
        assert cons.C == pytest.approx(beta * decay, rel=1e-12, abs=1e-15)
        assert cons.B * decay == pytest.approx(
            (alpha + cons.A + beta) * cons.C, rel=1e-12, abs=1e-15)
        assert cons.A == pytest.approx(r - cons.B - cons.C, rel=1e-12, abs=1e-15)
        assert cons.kappa == pytest.approx(cons.A + beta, rel=1e-12, abs=1e-15)
        assert cons.kappa == pytest.approx(
            kappa_closed_form(r, alpha, beta, h), rel=1e-12, abs=1e-15)


def test_zero_beta_collapses_constants():
    cons = solve_delay_constants(BASE_FIN, DelayParams(alpha=0.5, beta=0.0, h=2.0))
    assert cons.B == 0.0 and cons.C == 0.0
    assert cons.A == pytest.approx(0.1, rel=1e-14)
    assert cons.kappa == pytest.approx(0.1, rel=1e-14)


def test_zero_alpha_limit():
    cons = solve_delay_constants(BASE_FIN, DelayParams(alpha=0.0, beta=0.05, h=2.0))
    assert cons.C == pytest.approx(0.05, rel=1e-14)  # decay factor is 1
    params = ModelParams.build(
        insurance=InsuranceParams(lambda1=1.0, mu1=0.1, mu2=0.2, eta1=0.3, eta2=0.5),
        financial=BASE_FIN,
        delay=DelayParams(alpha=0.0, beta=0.05, h=2.0),
        dist=RiskAversionDist(family="exponential", points=((0.5, 1.0),)),
        horizon=2.0,
        x0=0.6,
    )
    assert params.m1_0 == pytest.approx(0.6 * 2.0, rel=1e-15)


def test_initial_average_benchmark(exp_case1):
    assert exp_case1.m1_0 == pytest.approx(0.7585446705942692, rel=1e-14)
    assert exp_case1.m2_0 == 0.6
    assert exp_case1.mean_gamma == pytest.approx(0.7, rel=1e-15)


def test_case2_mean(exp_case2):
    assert exp_case2.mean_gamma == pytest.approx(0.58, rel=1e-14)


@pytest.mark.parametrize("kwargs,snippet", [
    (dict(lambda1=-1.0, mu1=0.1, mu2=0.2, eta1=0.3, eta2=0.5), "lambda1"),
    (dict(lambda1=1.0, mu1=0.0, mu2=0.2, eta1=0.3, eta2=0.5), "mu1"),
    (dict(lambda1=1.0, mu1=0.1, mu2=0.2, eta1=0.6, eta2=0.5), "eta1"),
])
def test_insurance_validation(kwargs, snippet):
    with pytest.raises(ParameterError, match=snippet):
        InsuranceParams(**kwargs)


def test_financial_and_delay_validation():
    with pytest.raises(ParameterError, match="financial.r"):
        FinancialParams(r=0.0, mu=0.2, sigma=0.6)
    with pytest.raises(ParameterError, match="financial.mu"):
        FinancialParams(r=0.1, mu=0.05, sigma=0.6)
    with pytest.raises(ParameterError, match="delay.h"):
        DelayParams(alpha=0.5, beta=0.05, h=0.0)
    with pytest.raises(ParameterError, match="delay.alpha"):
        DelayParams(alpha=-0.1, beta=0.05, h=2.0)


def test_risk_aversion_validation():
    with pytest.raises(ParameterError, match="sum to 1"):
        RiskAversionDist(family="exponential", points=((0.5, 0.4), (0.9, 0.4)))
    with pytest.raises(ParameterError, match="family"):
        RiskAversionDist(family="quadratic", points=((0.5, 1.0),))
    with pytest.raises(ParameterError, match="gamma"):
        RiskAversionDist(family="exponential", points=((1e-5, 1.0),))
    with pytest.raises(ParameterError, match="gamma"):
        RiskAversionDist(family="power", points=((1.0, 1.0),))
    with pytest.raises(ParameterError, match="gamma"):
        RiskAversionDist(family="power", points=((1.5, 1.0),))
    # power gammas above 1 are rejected, exponential ones are fine
    d = RiskAversionDist(family="exponential", points=((1.5, 1.0),))
    assert d.gammas == (1.5,)


def test_probability_renormalization_is_exact():
    d = RiskAversionDist(
        family="exponential",
        points=((0.5, 0.1 + 1e-12), (0.9, 0.9)),
    )
    assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-15)


def test_power_requires_equal_loadings():
    with pytest.raises(ParameterError, match="equal"):
        ModelParams.build(
            insurance=InsuranceParams(lambda1=1.0, mu1=0.1, mu2=0.2, eta1=0.3, eta2=0.5),
            financial=BASE_FIN,
            delay=BASE_DELAY,
            dist=RiskAversionDist(family="power", points=((0.5, 1.0),)),
            horizon=2.0,
            x0=0.6,
        )


def test_frozen_dataclasses(exp_case1):
    with pytest.raises(dataclasses.FrozenInstanceError):
        exp_case1.insurance.mu1 = 0.5
    with pytest.raises(dataclasses.FrozenInstanceError):
        exp_case1.x0 = 1.0
