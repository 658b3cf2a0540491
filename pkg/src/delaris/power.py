"""Backward ODE system for the power-utility equilibrium.

With power utility the equilibrium is characterized by per-gamma growth
factors g_i(t) (terminal value 1) coupled through the aggregate risk
aversion

    varpi(t) = sum_i gamma_i * w_i / sum_i w_i,   w_i = g_i^{gamma_i/(1-gamma_i)} * p_i,

each factor solving, backward from the horizon,

    dg_i/dt = (1-gamma_i)/gamma_i * [ -kappa - G2/varpi
              + 0.5*gamma_i*G2/varpi^2 ] * g_i,
    G2 = (mu-r)^2/sigma^2 + (a*eta2)^2/b^2.

The system requires equal safety loadings (net loading zero). It is
integrated with fixed-step classical RK4, recomputing varpi from the stage
values of g. The aggregate varpi stays inside [min gamma, max gamma], so
the exact system cannot blow up; if a numerically extreme distribution
drives g out of (0, inf) the solver stops and flags the solution instead
of raising.

Equilibrium controls scale linearly in effective wealth w = x + beta*m1 > 0:

    q(t, w) = a*eta2*w / (b^2 * varpi(t)),    pi_x(t, w) = (mu-r)*w / (sigma^2 * varpi(t)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ParameterError
from .model import ModelParams
from .utility import POWER

_GRID_RTOL = 1e-9


class _Explosion(Exception):
    pass


@dataclass(frozen=True)
class OdeSolution:
    """Solved growth factors on a uniform grid.

    t: ascending node times; t[-1] is the horizon, where g = 1 exactly.
       When exploded, t[0] is the last time the solution stayed valid.
    g: array (len(t), n) of per-gamma factors.
    varpi: aggregate risk aversion at each node.
    """

    t: np.ndarray
    g: np.ndarray
    varpi: np.ndarray
    gammas: tuple[float, ...]
    probs: tuple[float, ...]
    dt: float
    horizon: float
    exploded: bool
    explosion_time: float | None

    @property
    def n(self) -> int:
        return len(self.gammas)


def _require_power(params: ModelParams) -> None:
    if params.dist.family != POWER:
        raise ParameterError(f"power-family routine called with family {params.dist.family!r}")
    if params.coeffs.eta != 0.0:
        raise ParameterError(
            "power-family system requires equal safety loadings (net loading zero), "
            f"got eta={params.coeffs.eta}"
        )


def _g2_const(params: ModelParams) -> float:
    co, fin = params.coeffs, params.financial
    return (fin.mu - fin.r) ** 2 / fin.sigma**2 + (co.a * co.eta2) ** 2 / co.b2


def aggregate_gamma(g, gammas, probs) -> float:
    """Aggregate risk aversion induced by factor values g (one grid row)."""
    g = np.asarray(g, dtype=float)
    gam = np.asarray(gammas, dtype=float)
    p = np.asarray(probs, dtype=float)
    w = np.exp(gam / (1.0 - gam) * np.log(g)) * p
    return float(w @ gam / w.sum())


def solve_growth_factors(params: ModelParams, dt: float | None = None) -> OdeSolution:
    """Integrate the factor system backward from the horizon with RK4.

    dt defaults to horizon/20000 and must divide the horizon (1e-9 relative).
    """
    _require_power(params)
    horizon = params.horizon
    if dt is None:
        dt = horizon / 20000.0
    if not (dt > 0.0) or not math.isfinite(dt):
        raise ParameterError(f"dt must be positive and finite, got {dt}")
    n_steps = int(round(horizon / dt))
    if n_steps < 1 or abs(n_steps * dt - horizon) > _GRID_RTOL * max(1.0, horizon):
        raise ParameterError(f"dt={dt} does not divide the horizon {horizon}")

    gam = np.array(params.dist.gammas, dtype=float)
    p = np.array(params.dist.probs, dtype=float)
    c = gam / (1.0 - gam)
    cinv = (1.0 - gam) / gam
    kappa = params.constants.kappa
    g2c = _g2_const(params)

    def rhs(g):
        if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
            raise _Explosion
        # overflow here is the explosion signal, not a reportable warning
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.exp(c * np.log(g)) * p
            tot = w.sum()
            varpi = (w @ gam) / tot
            out = cinv * (-kappa - g2c / varpi + 0.5 * gam * g2c / varpi**2) * g
        if not np.all(np.isfinite(out)):
            raise _Explosion
        return out

    # backward march: nodes t_k = horizon - k*dt, k = 0..n_steps
    g = np.ones_like(gam)
    rows = [g.copy()]
    exploded = False
    steps_done = 0
    for _ in range(n_steps):
        try:
            k1 = rhs(g)
            k2 = rhs(g - 0.5 * dt * k1)
            k3 = rhs(g - 0.5 * dt * k2)
            k4 = rhs(g - dt * k3)
            g_new = g - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(g_new)) or np.any(g_new <= 0.0):
                raise _Explosion
        except _Explosion:
            exploded = True
            break
        g = g_new
        rows.append(g.copy())
        steps_done += 1

    t_back = horizon - dt * np.arange(steps_done + 1)
    if not exploded:
        t_back[-1] = 0.0  # exact endpoint
    g_arr = np.array(rows)[::-1]
    t_arr = t_back[::-1].copy()
    varpi = np.array([aggregate_gamma(row, gam, p) for row in g_arr])
    return OdeSolution(
        t=t_arr,
        g=g_arr,
        varpi=varpi,
        gammas=params.dist.gammas,
        probs=params.dist.probs,
        dt=dt,
        horizon=horizon,
        exploded=exploded,
        explosion_time=float(t_arr[0]) if exploded else None,
    )


def _check_range(sol: OdeSolution, t: float) -> float:
    t = float(t)
    lo = float(sol.t[0])
    if not lo <= t <= sol.horizon:
        if sol.exploded:
            raise DomainError(
                f"t={t} outside the valid range [{lo}, {sol.horizon}] "
                f"(solution flagged as exploded at t={sol.explosion_time})"
            )
        raise DomainError(f"t={t} outside the grid range [{lo}, {sol.horizon}]")
    return t


def g_at(sol: OdeSolution, t: float) -> np.ndarray:
    """Factor values at t, linearly interpolated componentwise on the grid."""
    t = _check_range(sol, t)
    out = np.empty(sol.n)
    for i in range(sol.n):
        out[i] = np.interp(t, sol.t, sol.g[:, i])
    return out


def varpi_at(sol: OdeSolution, t: float) -> float:
    """Aggregate risk aversion at t, recomputed from the interpolated factors."""
    return aggregate_gamma(g_at(sol, t), sol.gammas, sol.probs)


def strategy(sol: OdeSolution, params: ModelParams, t: float, x: float, m1: float) -> tuple[float, float]:
    """Equilibrium (retention, invested amount) at (t, x, m1); both scale
    with effective wealth w = x + beta*m1, which must be positive."""
    _require_power(params)
    w = x + params.delay.beta * m1
    if w <= 0.0:
        raise DomainError(f"power strategy requires x + beta*m1 > 0, got {w}")
    varpi = varpi_at(sol, t)
    co, fin = params.coeffs, params.financial
    q = co.a * co.eta2 * w / (co.b2 * varpi)
    pi_x = (fin.mu - fin.r) * w / (fin.sigma**2 * varpi)
    return q, pi_x


def certainty_factor(sol: OdeSolution, t: float) -> float:
    """Probability-weighted sum of g_i^{gamma_i/(1-gamma_i)}; the value
    function is this factor times effective wealth."""
    g = g_at(sol, t)
    gam = np.asarray(sol.gammas)
    p = np.asarray(sol.probs)
    return float(np.exp(gam / (1.0 - gam) * np.log(g)) @ p)


def value(sol: OdeSolution, params: ModelParams, t: float, x: float, m1: float) -> float:
    """Aggregated certainty-equivalent value, linear in w = x + beta*m1 > 0."""
    _require_power(params)
    w = x + params.delay.beta * m1
    if w <= 0.0:
        raise DomainError(f"power value requires x + beta*m1 > 0, got {w}")
    return w * certainty_factor(sol, t)


def ansatz(sol: OdeSolution, params: ModelParams, i: int, t: float, x: float, m1: float) -> float:
    """Per-gamma expected utility of terminal effective wealth under the
    equilibrium strategy: g_i(t)^gamma_i * w^(1-gamma_i) / (1-gamma_i)."""
    _require_power(params)
    gam = sol.gammas[i]
    w = x + params.delay.beta * m1
    if w <= 0.0:
        raise DomainError(f"power ansatz requires x + beta*m1 > 0, got {w}")
    g = g_at(sol, t)[i]
    return g**gam * w ** (1.0 - gam) / (1.0 - gam)


def single_gamma_growth(params: ModelParams, gamma: float, t: float) -> float:
    """Closed-form factor for a one-point distribution:
    exp((1-gamma)/gamma * (kappa + 0.5*G2/gamma) * (T - t))."""
    _require_power(params)
    tau = params.horizon - float(t)
    rate = params.constants.kappa + 0.5 * _g2_const(params) / gamma
    return math.exp((1.0 - gamma) / gamma * rate * tau)


def single_gamma_value(params: ModelParams, gamma: float, t: float, x: float, m1: float) -> float:
    """Closed-form value for a one-point distribution:
    w * exp((kappa + 0.5*G2/gamma)*(T - t))."""
    _require_power(params)
    w = x + params.delay.beta * m1
    if w <= 0.0:
        raise DomainError(f"power value requires x + beta*m1 > 0, got {w}")
    rate = params.constants.kappa + 0.5 * _g2_const(params) / gamma
    return w * math.exp(rate * (params.horizon - float(t)))


def growth_rate(sol: OdeSolution, params: ModelParams, t: float) -> np.ndarray:
    """ODE right-hand side dg/dt evaluated on the interpolated factors."""
    _require_power(params)
    g = g_at(sol, t)
    gam = np.asarray(sol.gammas)
    p = np.asarray(sol.probs)
    w = np.exp(gam / (1.0 - gam) * np.log(g)) * p
    varpi = float(w @ gam / w.sum())
    g2c = _g2_const(params)
    kappa = params.constants.kappa
    return (1.0 - gam) / gam * (-kappa - g2c / varpi + 0.5 * gam * g2c / varpi**2) * g


def varpi_rate(sol: OdeSolution, params: ModelParams, t: float) -> float:
    """Analytic time derivative of the aggregate risk aversion:
    0.5*G2/varpi^2 * (E_w[gamma^2] - varpi^2), with E_w the w_i-weighted mean."""
    _require_power(params)
    g = g_at(sol, t)
    gam = np.asarray(sol.gammas)
    p = np.asarray(sol.probs)
    w = np.exp(gam / (1.0 - gam) * np.log(g)) * p
    tot = w.sum()
    varpi = float(w @ gam / tot)
    second = float(w @ (gam * gam) / tot)
    return 0.5 * _g2_const(params) / varpi**2 * (second - varpi**2)


def varpi_rate_residual(sol: OdeSolution, params: ModelParams, t: float) -> float:
    """|central-difference d(varpi)/dt - analytic rate| at the interior grid
    node nearest to t. Used as a consistency diagnostic: the residual is
    dominated by the O(dt^2) finite-difference truncation."""
    if len(sol.t) < 3:
        raise DomainError("need at least three grid nodes for the rate residual")
    k = int(np.clip(np.searchsorted(sol.t, t), 1, len(sol.t) - 2))
    if k > 1 and abs(sol.t[k - 1] - t) < abs(sol.t[k] - t):
        k -= 1
    k = int(np.clip(k, 1, len(sol.t) - 2))
    fd = (sol.varpi[k + 1] - sol.varpi[k - 1]) / (sol.t[k + 1] - sol.t[k - 1])
    return abs(fd - varpi_rate(sol, params, float(sol.t[k])))


def write_csv(sol: OdeSolution, path) -> None:
    """Serialize the solution grid; one row per node, metadata in a comment."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(
            "# power growth factors: probs="
            + ",".join(repr(p) for p in sol.probs)
            + f" dt={sol.dt!r} horizon={sol.horizon!r} exploded={sol.exploded}"
            + (f" explosion_time={sol.explosion_time!r}" if sol.exploded else "")
            + "\n"
        )
        f.write("t,varpi," + ",".join(f"g_{g:g}" for g in sol.gammas) + "\n")
        for k in range(len(sol.t)):
            row = [repr(float(sol.t[k])), repr(float(sol.varpi[k]))]
            row += [repr(float(v)) for v in sol.g[k]]
            f.write(",".join(row) + "\n")


def read_csv(path) -> OdeSolution:
    """Inverse of :func:`write_csv`."""
    with open(path, "r", encoding="utf-8") as f:
        meta_line = f.readline().strip()
        header = f.readline().strip().split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    meta = {}
    for tok in meta_line.lstrip("# ").split():
        if "=" in tok:
            key, _, val = tok.partition("=")
            meta[key] = val
    probs = tuple(float(v) for v in meta["probs"].split(","))
    gammas = tuple(float(name[2:]) for name in header[2:])
    exploded = meta.get("exploded") == "True"
    return OdeSolution(
        t=data[:, 0],
        g=data[:, 2:],
        varpi=data[:, 1],
        gammas=gammas,
        probs=probs,
        dt=float(meta["dt"]),
        horizon=float(meta["horizon"]),
        exploded=exploded,
        explosion_time=float(meta["explosion_time"]) if exploded else None,
    )
