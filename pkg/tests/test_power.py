import numpy as np
import pytest

from delaris import power as powmod
from delaris.exceptions import DomainError, ParameterError
from delaris.model import ModelParams, RiskAversionDist
from delaris.utility import POWER, utility

# frozen references: step-doubled first-order integration at dt = 1e-6
# (helpers.richardson_growth), independent of the RK4 solver under test
G0_CASE1 = (1.3000393046659242, 1.0265628314491584)
VARPI0_CASE1 = 0.6973552528424453
G0_CASE2 = (1.3052813922522757, 1.0256428155559951)
VARPI0_CASE2 = 0.577561764079297
# closed form for the collapsed single-gamma model
G0_SINGLE = 1.3068434592081293
V0_SINGLE = 0.8336710325890428
Q0_SINGLE = 0.19137817005891404
PI0_SINGLE = 0.35440401862761859


@pytest.fixture(scope="module")
def sol1(pow_case1):
    return powmod.solve_growth_factors(pow_case1, dt=1e-4)


def test_growth_factors_match_reference(sol1, pow_case2):
    np.testing.assert_allclose(sol1.g[0], G0_CASE1, rtol=1e-9)
    assert sol1.varpi[0] == pytest.approx(VARPI0_CASE1, rel=1e-9)
    sol2 = powmod.solve_growth_factors(pow_case2, dt=1e-4)
    np.testing.assert_allclose(sol2.g[0], G0_CASE2, rtol=1e-9)
    assert sol2.varpi[0] == pytest.approx(VARPI0_CASE2, rel=1e-9)


def test_terminal_and_bounds(sol1, pow_case1):
    assert sol1.t[0] == 0.0 and sol1.t[-1] == 2.0
    np.testing.assert_array_equal(sol1.g[-1], 1.0)
    # aggregated gamma starts at the plain mean and never leaves the hull
    assert sol1.varpi[-1] == pytest.approx(pow_case1.mean_gamma, abs=1e-12)
    assert np.all(sol1.varpi >= 0.5 - 1e-12) and np.all(sol1.varpi <= 0.9 + 1e-12)
    # it can only grow along calendar time
    assert np.all(np.diff(sol1.varpi) >= -1e-12)


def test_single_gamma_closed_form(pow_single):
    sol = powmod.solve_growth_factors(pow_single, dt=1e-4)
    assert sol.g[0][0] == pytest.approx(G0_SINGLE, rel=1e-10)
    assert sol.varpi[0] == pytest.approx(0.5, abs=1e-14)
    for t in (0.0, 0.75, 2.0):
        closed = powmod.single_gamma_growth(pow_single, 0.5, t)
        assert powmod.g_at(sol, t)[0] == pytest.approx(closed, rel=1e-10)
    v = powmod.value(sol, pow_single, 0.0, pow_single.x0, pow_single.m1_0)
    assert v == pytest.approx(V0_SINGLE, rel=1e-10)
    assert v == pytest.approx(
        powmod.single_gamma_value(pow_single, 0.5, 0.0, pow_single.x0, pow_single.m1_0),
        rel=1e-10,
    )
    q0, pi0 = powmod.strategy(sol, pow_single, 0.0, pow_single.x0, pow_single.m1_0)
    assert q0 == pytest.approx(Q0_SINGLE, rel=1e-10)
    assert pi0 == pytest.approx(PI0_SINGLE, rel=1e-10)


def test_rk4_order(pow_single):
    # single-gamma truncation error vs the exact solution must shrink ~16x
    # per halving; coarse steps keep it far above the rounding floor
    exact = powmod.single_gamma_growth(pow_single, 0.5, 0.0)
    errs = []
    for dt in (0.2, 0.1):
        sol = powmod.solve_growth_factors(pow_single, dt=dt)
        errs.append(abs(sol.g[0][0] - exact))
    factor = errs[0] / errs[1]
    assert 12.0 <= factor <= 20.0


def test_strategy_scales_with_effective_wealth(sol1, pow_case1):
    q1, p1 = powmod.strategy(sol1, pow_case1, 0.5, 0.6, 0.8)
    q2, p2 = powmod.strategy(sol1, pow_case1, 0.5, 1.2, 1.6)
    assert q2 == pytest.approx(2 * q1, rel=1e-13)
    assert p2 == pytest.approx(2 * p1, rel=1e-13)
    with pytest.raises(DomainError):
        powmod.strategy(sol1, pow_case1, 0.5, -1.0, 0.0)


def test_terminal_value_and_ansatz(sol1, pow_case1):
    rng = np.random.default_rng(17)
    for _ in range(10):
        x = rng.uniform(0.1, 2.0)
        m1 = rng.uniform(0.1, 2.0)
        w = x + pow_case1.delay.beta * m1
        assert powmod.value(sol1, pow_case1, 2.0, x, m1) == pytest.approx(w, rel=1e-12)
        for i, gamma in enumerate(pow_case1.dist.gammas):
            got = powmod.ansatz(sol1, pow_case1, i, 2.0, x, m1)
            assert got == pytest.approx(utility(POWER, gamma, w), rel=1e-12)
    assert powmod.certainty_factor(sol1, 2.0) == pytest.approx(1.0, abs=1e-14)


def test_growth_rate_matches_finite_difference(sol1, pow_case1):
    eps = 1e-5
    for t in (0.3, 1.0, 1.7):
        fd = (powmod.g_at(sol1, t + eps) - powmod.g_at(sol1, t - eps)) / (2 * eps)
        np.testing.assert_allclose(powmod.growth_rate(sol1, pow_case1, t), fd, rtol=1e-5)


def test_varpi_rate_residual_small(pow_case1):
    sol = powmod.solve_growth_factors(pow_case1, dt=1e-3)
    assert powmod.varpi_rate_residual(sol, pow_case1, 1.0) < 1e-8


def test_interpolation_hits_nodes(sol1):
    k = 777
    np.testing.assert_array_equal(powmod.g_at(sol1, float(sol1.t[k])), sol1.g[k])
    assert powmod.varpi_at(sol1, float(sol1.t[k])) == sol1.varpi[k]


def test_aggregate_gamma_one_point():
    w = powmod.aggregate_gamma(np.array([1.7]), np.array([0.5]), np.array([1.0]))
    assert w == pytest.approx(0.5, rel=1e-15)


def test_explosion_flagged(pow_case1):
    tiny = ModelParams.build(
        insurance=pow_case1.insurance,
        financial=pow_case1.financial,
        delay=pow_case1.delay,
        dist=RiskAversionDist(family=POWER, points=((1e-4, 1.0),)),
        horizon=2.0,
        x0=0.6,
    )
    sol = powmod.solve_growth_factors(tiny, dt=1e-4)
    assert sol.exploded
    assert sol.explosion_time is not None and 0.0 < sol.explosion_time < 2.0
    assert sol.t[0] == pytest.approx(sol.explosion_time)
    # queries inside the truncated region must fail loudly
    with pytest.raises(DomainError, match="explod"):
        powmod.g_at(sol, 0.5 * sol.explosion_time)
    # while the surviving tail still answers
    g_tail = powmod.g_at(sol, float(sol.t[len(sol.t) // 2]))
    assert np.all(np.isfinite(g_tail))


def test_family_guard(exp_case1):
    with pytest.raises(ParameterError):
        powmod.solve_growth_factors(exp_case1, dt=1e-3)


def test_dt_must_divide_horizon(pow_case1):
    with pytest.raises(ParameterError):
        powmod.solve_growth_factors(pow_case1, dt=0.0003)


def test_csv_round_trip(tmp_path, pow_case1):
    sol = powmod.solve_growth_factors(pow_case1, dt=1e-2)
    path = tmp_path / "growth.csv"
    powmod.write_csv(sol, path)
    text = path.read_text().splitlines()
    assert text[0].startswith("# power growth factors:")
    assert text[1] == "t,varpi,g_0.5,g_0.9"
    back = powmod.read_csv(path)
    np.testing.assert_array_equal(back.t, sol.t)
    np.testing.assert_array_equal(back.g, sol.g)
    np.testing.assert_array_equal(back.varpi, sol.varpi)
    assert back.gammas == sol.gammas
    assert back.probs == sol.probs
    assert back.dt == sol.dt and back.horizon == sol.horizon
    assert back.exploded == sol.exploded and back.explosion_time == sol.explosion_time
