"""Baseline parameter presets, one-dimensional sweeps and figure data.

The bundled baseline uses the benchmark configuration: claim intensity 1,
claim moments (0.1, 0.2), loadings (0.3, 0.5) for the exponential family
(equal loadings 0.3 for power), rates (r, mu, sigma) = (0.1, 0.2, 0.6),
memory (alpha, beta, h) = (0.5, 0.05, 2), horizon 2, initial wealth 0.6,
and the two-point risk-aversion cases

    case I : gamma = (0.5, 0.9), p = (0.5, 0.5)
    case II: gamma = (0.5, 0.9), p = (0.8, 0.2)

Sweeps recompute every derived quantity per point; the power family
re-integrates its factor system per point (default grid horizon/2000, an
RK4 error far below the 1e-10 shape-noise band). Invalid points are
reported as marked rows, never dropped silently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import exponential as expmod
from . import power as powmod
from .exceptions import DelarisError
from .model import (
    DelayParams,
    FinancialParams,
    InsuranceParams,
    ModelParams,
    RiskAversionDist,
)
from .utility import EXPONENTIAL, POWER

CASES = ("I", "II")

SWEEP_RANGES = {
    "alpha": (0.05, 1.2),
    "beta": (0.0, 0.5),
    "h": (0.25, 4.0),
    "mu1": (0.05, 0.2),
    "mu2": (0.1, 0.4),
    "eta2": (0.3, 0.8),
    "r": (0.02, 0.18),
    "mu": (0.12, 0.4),
    "sigma": (0.3, 1.0),
}

POWER_SWEEP_DT_DIVISOR = 2000


def case_points(case: str) -> tuple[tuple[float, float], ...]:
    if case == "I":
        return ((0.5, 0.5), (0.9, 0.5))
    if case == "II":
        return ((0.5, 0.8), (0.9, 0.2))
    raise DelarisError(f"unknown risk-aversion case {case!r}; expected one of {CASES}")


def baseline_params(family: str = EXPONENTIAL, case: str = "I") -> ModelParams:
    """The bundled benchmark model for the given family and case."""
    eta1 = 0.3
    eta2 = 0.5 if family == EXPONENTIAL else 0.3
    return ModelParams.build(
        insurance=InsuranceParams(lambda1=1.0, mu1=0.1, mu2=0.2, eta1=eta1, eta2=eta2),
        financial=FinancialParams(r=0.1, mu=0.2, sigma=0.6),
        delay=DelayParams(alpha=0.5, beta=0.05, h=2.0),
        dist=RiskAversionDist(family=family, points=case_points(case)),
        horizon=2.0,
        x0=0.6,
    )


def apply_param(base: ModelParams, name: str, value: float) -> ModelParams:
    """Rebuild the model with one primitive changed. For the power family a
    swept eta2 co-moves eta1 so the net loading stays zero."""
    ins, fin, delay = base.insurance, base.financial, base.delay
    if name in ("alpha", "beta", "h"):
        delay = replace(delay, **{name: value})
    elif name in ("mu1", "mu2"):
        ins = replace(ins, **{name: value})
    elif name == "eta2":
        if base.dist.family == POWER:
            ins = replace(ins, eta1=value, eta2=value)
        else:
            ins = replace(ins, eta2=value)
    elif name in ("r", "mu", "sigma"):
        fin = replace(fin, **{name: value})
    else:
        raise DelarisError(f"unknown sweep parameter {name!r}; expected one of {sorted(SWEEP_RANGES)}")
    return ModelParams.build(
        insurance=ins,
        financial=fin,
        delay=delay,
        dist=base.dist,
        horizon=base.horizon,
        x0=base.x0,
    )


def initial_controls(params: ModelParams, power_dt: float | None = None) -> tuple[float, float]:
    """(retention, invested fraction) at time zero and the initial state."""
    if params.dist.family == EXPONENTIAL:
        q0, pi_amount = expmod.strategy(params, 0.0)
    else:
        if power_dt is None:
            power_dt = params.horizon / POWER_SWEEP_DT_DIVISOR
        sol = powmod.solve_growth_factors(params, dt=power_dt)
        q0, pi_amount = powmod.strategy(sol, params, 0.0, params.x0, params.m1_0)
    return q0, pi_amount / params.x0


@dataclass(frozen=True)
class SweepResult:
    """One-parameter sweep of the time-zero equilibrium controls."""

    param: str
    family: str
    case: str
    values: np.ndarray
    q0: np.ndarray
    pi0: np.ndarray
    valid: np.ndarray
    reasons: tuple[str, ...]


def run_sweep(
    base: ModelParams,
    case: str,
    param: str,
    points: int = 25,
    lo: float | None = None,
    hi: float | None = None,
    power_dt: float | None = None,
) -> SweepResult:
    if param not in SWEEP_RANGES:
        raise DelarisError(f"unknown sweep parameter {param!r}; expected one of {sorted(SWEEP_RANGES)}")
    lo_d, hi_d = SWEEP_RANGES[param]
    lo = lo_d if lo is None else lo
    hi = hi_d if hi is None else hi
    values = np.linspace(lo, hi, points)
    q0 = np.full(points, np.nan)
    pi0 = np.full(points, np.nan)
    valid = np.zeros(points, dtype=bool)
    reasons = []
    for k, v in enumerate(values):
        try:
            p = apply_param(base, param, float(v))
            q0[k], pi0[k] = initial_controls(p, power_dt=power_dt)
            valid[k] = True
            reasons.append("")
        except DelarisError as err:
            reasons.append(str(err))
    return SweepResult(
        param=param,
        family=base.dist.family,
        case=case,
        values=values,
        q0=q0,
        pi0=pi0,
        valid=valid,
        reasons=tuple(reasons),
    )


# ------------------------------------------------------------- figures

# claim vocabulary: ("increasing"|"decreasing", column),
# ("interior_min", column, x_star), ("below", lower_column, higher_column)
FigPanel = dict


def _panel(param, metric, sweeps_by_case, claims):
    cols = {}
    for case, sweep in sweeps_by_case.items():
        arr = sweep.q0 if metric == "q_hat_0" else sweep.pi0
        cols[f"{metric}_case_{case}"] = arr
    any_sweep = next(iter(sweeps_by_case.values()))
    return {
        "param": param,
        "values": any_sweep.values,
        "columns": cols,
        "valid": any_sweep.valid,
        "reasons": any_sweep.reasons,
        "claims": claims,
    }


def figure_data(
    points: int = 25,
    power_dt: float | None = None,
    families: tuple[str, ...] = (EXPONENTIAL, POWER),
) -> dict[str, FigPanel]:
    """All bundled figure panels keyed by file stem (fig{N}_{panel}).
    Restricting ``families`` skips the other family's panels entirely."""

    def sweeps_for(family, param):
        out = {}
        for case in CASES:
            base = baseline_params(family, case)
            out[case] = run_sweep(base, case, param, points=points, power_dt=power_dt)
        return out

    panels: dict[str, FigPanel] = {}

    if EXPONENTIAL not in families:
        exp_a = exp_b = exp_h = None
    else:
        exp_a = sweeps_for(EXPONENTIAL, "alpha")
        exp_b = sweeps_for(EXPONENTIAL, "beta")
        exp_h = sweeps_for(EXPONENTIAL, "h")
    if POWER in families:
        pow_a = sweeps_for(POWER, "alpha")
        pow_b = sweeps_for(POWER, "beta")
        pow_h = sweeps_for(POWER, "h")
        pow_mu1 = sweeps_for(POWER, "mu1")
        pow_mu2 = sweeps_for(POWER, "mu2")
        pow_eta2 = sweeps_for(POWER, "eta2")
        pow_r = sweeps_for(POWER, "r")
        pow_mu = sweeps_for(POWER, "mu")
        pow_sigma = sweeps_for(POWER, "sigma")

    alpha_star = baseline_sensitivity_threshold()

    def both(metric):
        # lower mean risk aversion (case II) always demands the larger position
        return [("below", f"{metric}_case_I", f"{metric}_case_II")]

    # exponential: retention/investment versus the memory parameters
    if exp_a is not None:
        for stem, sweeps, param, metric, claims in (
            ("fig1_a", exp_a, "alpha", "q_hat_0", [("interior_min", "q_hat_0_case_I", alpha_star),
                                                   ("interior_min", "q_hat_0_case_II", alpha_star)]),
            ("fig1_b", exp_b, "beta", "q_hat_0", [("decreasing", "q_hat_0_case_I"),
                                                  ("decreasing", "q_hat_0_case_II")]),
            ("fig1_c", exp_h, "h", "q_hat_0", [("decreasing", "q_hat_0_case_I"),
                                               ("decreasing", "q_hat_0_case_II")]),
            ("fig1_d", exp_a, "alpha", "pi_0", [("interior_min", "pi_0_case_I", alpha_star),
                                                ("interior_min", "pi_0_case_II", alpha_star)]),
            ("fig1_e", exp_b, "beta", "pi_0", [("decreasing", "pi_0_case_I"),
                                               ("decreasing", "pi_0_case_II")]),
            ("fig1_f", exp_h, "h", "pi_0", [("decreasing", "pi_0_case_I"),
                                            ("decreasing", "pi_0_case_II")]),
        ):
            claims = claims + both(metric)
            panels[stem] = _panel(param, metric, sweeps, claims)

    if POWER not in families:
        return panels

    # power: single-case panels for alpha
    for stem, case, metric in (
        ("fig2_a", "I", "q_hat_0"),
        ("fig2_b", "II", "q_hat_0"),
        ("fig2_c", "I", "pi_0"),
        ("fig2_d", "II", "pi_0"),
    ):
        sweep = pow_a[case]
        panels[stem] = _panel("alpha", metric, {case: sweep},
                              [("decreasing", f"{metric}_case_{case}")])

    # power: beta and h
    for stem, sweeps, metric, param in (
        ("fig3_a", pow_b, "q_hat_0", "beta"),
        ("fig3_b", pow_b, "pi_0", "beta"),
        ("fig3_c", pow_h, "q_hat_0", "h"),
        ("fig3_d", pow_h, "pi_0", "h"),
    ):
        claims = [("increasing", f"{metric}_case_I"), ("increasing", f"{metric}_case_II")]
        claims += both(metric)
        panels[stem] = _panel(param, metric, sweeps, claims)

    # power: insurance primitives on the retention
    for stem, sweeps, param, direction in (
        ("fig4_a", pow_mu1, "mu1", "increasing"),
        ("fig4_b", pow_mu2, "mu2", "decreasing"),
        ("fig4_c", pow_eta2, "eta2", "increasing"),
    ):
        claims = [(direction, "q_hat_0_case_I"), (direction, "q_hat_0_case_II")]
        claims += both("q_hat_0")
        panels[stem] = _panel(param, "q_hat_0", sweeps, claims)

    # power: insurance primitives on the investment, one case per panel
    for stem, sweeps, param, case, direction in (
        ("fig5_a", pow_mu1, "mu1", "I", "increasing"),
        ("fig5_b", pow_mu1, "mu1", "II", "increasing"),
        ("fig5_c", pow_mu2, "mu2", "I", "decreasing"),
        ("fig5_d", pow_mu2, "mu2", "II", "decreasing"),
        ("fig5_e", pow_eta2, "eta2", "I", "increasing"),
        ("fig5_f", pow_eta2, "eta2", "II", "increasing"),
    ):
        sweep = sweeps[case]
        panels[stem] = _panel(param, "pi_0", {case: sweep},
                              [(direction, f"pi_0_case_{case}")])

    # power: market primitives on both controls
    for stem, sweeps, param, metric, direction in (
        ("fig6_a", pow_r, "r", "q_hat_0", "decreasing"),
        ("fig6_b", pow_mu, "mu", "q_hat_0", "increasing"),
        ("fig6_c", pow_sigma, "sigma", "q_hat_0", "decreasing"),
        ("fig6_d", pow_r, "r", "pi_0", "decreasing"),
        ("fig6_e", pow_mu, "mu", "pi_0", "increasing"),
        ("fig6_f", pow_sigma, "sigma", "pi_0", "decreasing"),
    ):
        claims = [(direction, f"{metric}_case_I"), (direction, f"{metric}_case_II")]
        claims += both(metric)
        panels[stem] = _panel(param, metric, sweeps, claims)

    return panels


def baseline_sensitivity_threshold() -> float:
    """The alpha at which the exponential retention's alpha-derivative flips
    for the baseline window h = 2."""
    base = baseline_params(EXPONENTIAL, "I")
    return expmod.sensitivity(base).alpha_star


def validate_shapes(panels: dict[str, FigPanel], band: float = 1e-10) -> list[str]:
    """Check every panel's qualitative claims; returns human-readable
    violations (empty means all shapes hold). Differences within ``band``
    (scaled by the column's largest magnitude) count as noise."""
    violations = []
    for stem, panel in panels.items():
        xs = panel["values"]
        if not panel["valid"].all():
            bad = [f"{xs[i]:g}: {panel['reasons'][i]}" for i in np.nonzero(~panel["valid"])[0]]
            violations.append(f"{stem}: invalid sweep points ({'; '.join(bad)})")
            continue
        for claim in panel["claims"]:
            kind, col = claim[0], claim[1]
            y = panel["columns"][col]
            tol = band * max(1.0, float(np.nanmax(np.abs(y))))
            d = np.diff(y)
            if kind == "increasing":
                if np.any(d < -tol):
                    violations.append(f"{stem}: {col} not increasing in {panel['param']}")
            elif kind == "decreasing":
                if np.any(d > tol):
                    violations.append(f"{stem}: {col} not decreasing in {panel['param']}")
            elif kind == "interior_min":
                x_star = claim[2]
                k = int(np.argmin(y))
                if k == 0 or k == len(y) - 1:
                    violations.append(f"{stem}: {col} minimum not interior")
                    continue
                if np.any(d[:k] > tol) or np.any(d[k:] < -tol):
                    violations.append(f"{stem}: {col} not V-shaped around its minimum")
                cell = xs[1] - xs[0]
                if abs(xs[k] - x_star) > cell:
                    violations.append(
                        f"{stem}: {col} minimum at {xs[k]:g}, expected near {x_star:g}"
                    )
            elif kind == "below":
                hi_col = claim[2]
                y_hi = panel["columns"][hi_col]
                if np.any(y - y_hi > -tol):
                    violations.append(f"{stem}: {col} not strictly below {hi_col}")
            else:
                violations.append(f"{stem}: unknown claim {kind!r}")
    return violations
