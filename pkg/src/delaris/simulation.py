"""Euler-Maruyama simulation of the delayed wealth dynamics.

State per path: wealth X, running memory M1 (exponentially weighted average
of the last h units of wealth) and the lagged wealth M2(t) = X(t - h), with
the constant pre-history X(s) = x0 for s <= 0. One Euler step:

    X_{k+1}  = X_k + [A*X_k + B*M1_k + C*M2_k + a*eta + a*eta2*q_k
               + pi_k*(mu - r)] dt + b*q_k*sqrt(dt)*Z1 + sigma*pi_k*sqrt(dt)*Z2
    M1_{k+1} = M1_k + (X_k - alpha*M1_k - exp(-alpha*h)*M2_k) dt

where pi_k is the invested amount and Z1, Z2 are independent standard
normals. The scheme is weak order one.

Reproducibility: path j draws its noise from ``numpy`` PCG64 seeded with
``SeedSequence((seed, j))``, the documented per-path derivation; Z1 and Z2
are the two columns of a single (K, 2) standard-normal draw. Results are
bit-identical for a fixed (params, config, path index) regardless of how
paths are batched, and Monte Carlo aggregation reduces in path-index order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import exponential as expmod
from . import power as powmod
from .exceptions import DomainError, ParameterError
from .model import ModelParams
from .utility import (
    EXPONENTIAL,
    POWER,
    inverse_utility,
    inverse_utility_d1,
    utility,
)

# strategy callbacks take (t, x_array, m1_array) and return (q, pi_amount)
StrategySource = Union[str, powmod.OdeSolution, Callable]

_CHUNK = 2048


@dataclass(frozen=True)
class SimConfig:
    """Simulation controls. ``strategy`` is either the string
    "exponential" (closed-form equilibrium schedule), a power
    :class:`~delaris.power.OdeSolution` (wealth-proportional equilibrium), or
    a callable ``(t, x, m1) -> (q, pi_amount)`` operating on arrays."""

    dt: float
    n_paths: int
    seed: int
    strategy: StrategySource

    def __post_init__(self):
        if not math.isfinite(self.dt) or self.dt <= 0.0:
            raise ParameterError(f"sim.dt must be positive and finite, got {self.dt}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ParameterError(f"sim.n_paths must be a positive integer, got {self.n_paths}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ParameterError(f"sim.seed must be a nonnegative integer, got {self.seed}")
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class SimPath:
    """One recorded path on the uniform grid t_k = k*dt."""

    t: np.ndarray
    X: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    q: np.ndarray
    pi_x: np.ndarray
    seed: int
    path_index: int
    domain_exit: bool
    exit_time: float | None
    terminal_effective_wealth: float


def _grid_steps(params: ModelParams, cfg: SimConfig) -> tuple[int, int]:
    """Number of steps over the horizon and over the memory window h.
    Both must be integral multiples of dt."""
    out = []
    for name, span in (("horizon", params.horizon), ("delay.h", params.delay.h)):
        n = int(round(span / cfg.dt))
        if n < 1 or abs(n * cfg.dt - span) > 1e-9 * max(1.0, span):
            raise ParameterError(f"sim.dt={cfg.dt} must divide {name}={span}")
        out.append(n)
    return out[0], out[1]


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """The documented per-path generator: PCG64(SeedSequence((seed, index)))."""
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(path_index))))


def _make_step_strategy(params: ModelParams, cfg: SimConfig, n_steps: int):
    """Normalize the strategy source to a per-step callable
    (k, t, x_arr, m1_arr, w_arr) -> (q, pi) broadcastable to x_arr."""
    strat = cfg.strategy
    dt = cfg.dt
    if strat == EXPONENTIAL:
        sched = [expmod.strategy(params, min(k * dt, params.horizon)) for k in range(n_steps + 1)]
        q_s = np.array([s[0] for s in sched])
        pi_s = np.array([s[1] for s in sched])
        return lambda k, t, x, m1, w: (q_s[k], pi_s[k]), False
    if isinstance(strat, powmod.OdeSolution):
        if params.dist.family != POWER:
            raise ParameterError("power strategy supplied for a non-power distribution")
        varpi_s = np.array(
            [powmod.varpi_at(strat, min(k * dt, params.horizon)) for k in range(n_steps + 1)]
        )
        co, fin = params.coeffs, params.financial
        cq = co.a * co.eta2 / co.b2
        cpi = (fin.mu - fin.r) / fin.sigma**2
        return lambda k, t, x, m1, w: (cq * w / varpi_s[k], cpi * w / varpi_s[k]), True
    if callable(strat):
        return lambda k, t, x, m1, w: strat(t, x, m1), False
    raise ParameterError(f"unrecognized strategy source {strat!r}")


def _run_paths(params: ModelParams, cfg: SimConfig, indices, record: bool, resolved=None):
    """Simulate the given path indices together (vectorized elementwise, so
    results do not depend on the batching). Returns terminal effective
    wealth, exit times, the control L2 accumulator, and optionally the full
    per-step records."""
    n_steps, n_lag = _grid_steps(params, cfg)
    m = len(indices)
    dt, sq_dt = cfg.dt, math.sqrt(cfg.dt)
    co, fin, delay, cons = params.coeffs, params.financial, params.delay, params.constants
    e_ah = math.exp(-delay.alpha * delay.h)
    a_eta = co.a * co.eta
    a_eta2 = co.a * co.eta2
    mu_r = fin.mu - fin.r
    beta = delay.beta
    step_strategy, power_domain = resolved or _make_step_strategy(params, cfg, n_steps)

    noise = np.empty((n_steps, m, 2))
    for j, idx in enumerate(indices):
        noise[:, j, :] = path_rng(cfg.seed, idx).standard_normal((n_steps, 2))

    x = np.full(m, float(params.x0))
    m1 = np.full(m, float(params.m1_0))
    hist = np.empty((n_steps + 1, m))
    hist[0] = x
    active = np.ones(m, dtype=bool)
    exit_time = np.full(m, np.nan)
    control_l2 = np.zeros(m)
    pre_history = np.full(m, float(params.x0))

    rec = None
    if record:
        rec = {name: np.full((n_steps + 1, m), np.nan) for name in ("X", "M1", "M2", "q", "pi")}

    for k in range(n_steps + 1):
        t_k = k * dt
        m2 = hist[k - n_lag] if k >= n_lag else pre_history
        w = x + beta * m1
        if power_domain:
            exited_now = active & ~(w > 0.0)
            if exited_now.any():
                exit_time[exited_now] = t_k
                active = active & ~exited_now
                x = np.where(active, x, np.nan)
                m1 = np.where(active, m1, np.nan)
                w = x + beta * m1
                hist[k] = x
        q, pi = step_strategy(k, t_k, x, m1, w)
        q = np.where(active, np.broadcast_to(np.asarray(q, dtype=float), (m,)), np.nan)
        pi = np.where(active, np.broadcast_to(np.asarray(pi, dtype=float), (m,)), np.nan)
        if np.any(q[active] < 0.0):
            raise DomainError("strategy returned a negative retention q (inadmissible)")
        if record:
            rec["X"][k], rec["M1"][k], rec["M2"][k] = x, m1, np.where(active, m2, np.nan)
            rec["q"][k], rec["pi"][k] = q, pi
        if k == n_steps:
            break
        drift = cons.A * x + cons.B * m1 + cons.C * m2 + a_eta + a_eta2 * q + pi * mu_r
        x_next = x + drift * dt + co.b * q * sq_dt * noise[k, :, 0] + fin.sigma * pi * sq_dt * noise[k, :, 1]
        m1_next = m1 + (x - delay.alpha * m1 - e_ah * m2) * dt
        control_l2 += (q * q + pi * pi) * dt
        x = np.where(active, x_next, np.nan)
        m1 = np.where(active, m1_next, np.nan)
        hist[k + 1] = x

    w_term = x + beta * m1
    return w_term, exit_time, control_l2, rec


def simulate_path(params: ModelParams, cfg: SimConfig, path_index: int = 0) -> SimPath:
    """Simulate and fully record a single path (noise derived from
    (cfg.seed, path_index) per the documented scheme)."""
    n_steps, _ = _grid_steps(params, cfg)
    w_term, exit_time, _, rec = _run_paths(params, cfg, [int(path_index)], record=True)
    exited = bool(np.isfinite(exit_time[0]))
    return SimPath(
        t=np.arange(n_steps + 1) * cfg.dt,
        X=rec["X"][:, 0].copy(),
        M1=rec["M1"][:, 0].copy(),
        M2=rec["M2"][:, 0].copy(),
        q=rec["q"][:, 0].copy(),
        pi_x=rec["pi"][:, 0].copy(),
        seed=cfg.seed,
        path_index=int(path_index),
        domain_exit=exited,
        exit_time=float(exit_time[0]) if exited else None,
        terminal_effective_wealth=float(w_term[0]),
    )


def m1_quadrature(params: ModelParams, path: SimPath, k: int) -> float:
    """Trapezoid evaluation of the memory integral
    int_{-h}^{0} e^{alpha*s} X(t_k + s) ds on the path's grid, using the
    constant pre-history for times before zero. Cross-check for the
    ODE-propagated M1."""
    dt = float(path.t[1] - path.t[0])
    n_lag = int(round(params.delay.h / dt))
    vals = np.empty(n_lag + 1)
    for j in range(n_lag + 1):
        idx = k - n_lag + j
        x_j = path.X[idx] if idx >= 0 else params.x0
        s = -params.delay.h + j * dt
        vals[j] = math.exp(params.delay.alpha * s) * x_j
    weights = np.full(n_lag + 1, dt)
    weights[0] = weights[-1] = 0.5 * dt
    return float(vals @ weights)


@dataclass(frozen=True)
class PerGammaEstimate:
    gamma: float
    p: float
    y_mean: float
    y_se: float
    ce: float
    ce_se: float


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo certainty-equivalent aggregate J = sum_i p_i * u_i^{-1}(y_i),
    with a delta-method standard error (using the sample covariance of the
    per-gamma payoffs, which share paths)."""

    mean: float
    se: float
    n_paths: int
    excluded_paths: int
    per_gamma: tuple[PerGammaEstimate, ...]
    control_l2_mean: float


def mc_reward(params: ModelParams, cfg: SimConfig) -> McEstimate:
    """Estimate the expected certainty equivalent of terminal effective
    wealth under the configured strategy.

    Paths whose terminal effective wealth leaves the utility domain (power
    family: w <= 0 or an earlier domain exit) are excluded and counted,
    never clamped."""
    family = params.dist.family
    n_steps, _ = _grid_steps(params, cfg)
    resolved = _make_step_strategy(params, cfg, n_steps)
    w_all = np.empty(cfg.n_paths)
    l2_all = np.empty(cfg.n_paths)
    start = 0
    while start < cfg.n_paths:
        stop = min(start + _CHUNK, cfg.n_paths)
        w_term, _, l2, _ = _run_paths(params, cfg, range(start, stop), record=False, resolved=resolved)
        w_all[start:stop] = w_term
        l2_all[start:stop] = l2
        start = stop

    valid = np.isfinite(w_all)
    if family == POWER:
        valid &= w_all > 0.0
    excluded = int(cfg.n_paths - valid.sum())
    w_used = w_all[valid]
    n_used = len(w_used)
    if n_used < 2:
        raise DomainError(f"only {n_used} usable paths ({excluded} excluded)")

    gammas = params.dist.gammas
    probs = params.dist.probs
    payoffs = np.vstack([utility(family, g, w_used) for g in gammas])
    y_mean = payoffs.mean(axis=1)
    y_se = payoffs.std(axis=1, ddof=1) / math.sqrt(n_used)
    per = []
    grad = np.empty(len(gammas))
    for i, (g, p) in enumerate(zip(gammas, probs)):
        d1 = inverse_utility_d1(family, g, float(y_mean[i]))
        ce = inverse_utility(family, g, float(y_mean[i]))
        per.append(
            PerGammaEstimate(
                gamma=g, p=p, y_mean=float(y_mean[i]), y_se=float(y_se[i]),
                ce=ce, ce_se=abs(d1) * float(y_se[i]),
            )
        )
        grad[i] = p * d1
    mean = float(np.dot(probs, [pg.ce for pg in per]))
    cov = np.cov(payoffs, ddof=1) if len(gammas) > 1 else np.array([[payoffs.var(ddof=1)]])
    cov = np.atleast_2d(cov)
    se = float(math.sqrt(max(grad @ cov @ grad, 0.0) / n_used))
    return McEstimate(
        mean=mean,
        se=se,
        n_paths=cfg.n_paths,
        excluded_paths=excluded,
        per_gamma=tuple(per),
        control_l2_mean=float(np.mean(l2_all[valid])),
    )


def write_path_csv(path: SimPath, file_path) -> None:
    """Serialize a recorded path: columns t, X, M1, M2, q, pi_amount."""
    with open(file_path, "w", encoding="utf-8") as f:
        f.write("t,X,M1,M2,q,pi_amount\n")
        for k in range(len(path.t)):
            f.write(
                ",".join(
                    repr(float(v))
                    for v in (path.t[k], path.X[k], path.M1[k], path.M2[k], path.q[k], path.pi_x[k])
                )
                + "\n"
            )


def estimate_to_dict(est: McEstimate) -> dict:
    """JSON-ready view of an estimate."""
    return {
        "mean": est.mean,
        "se": est.se,
        "n_paths": est.n_paths,
        "excluded_paths": est.excluded_paths,
        "per_gamma": [
            {
                "gamma": pg.gamma,
                "p": pg.p,
                "y_mean": pg.y_mean,
                "y_se": pg.y_se,
                "ce": pg.ce,
                "ce_se": pg.ce_se,
            }
            for pg in est.per_gamma
        ],
    }


def write_estimate_json(est: McEstimate, file_path) -> None:
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(estimate_to_dict(est), f, indent=2, sort_keys=True)
        f.write("\n")
