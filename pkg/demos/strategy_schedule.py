"""Print the closed-form equilibrium schedule for the exponential family.

The retention and investment rules are deterministic functions of time,
q(t) and pi(t), both decaying toward their terminal levels at the rate
kappa derived from the memory closure. The script tabulates the schedule
for both benchmark risk-aversion cases and then reports the comparative
statics of q in the memory parameters, including the thresholds where
the alpha- and beta-derivatives change sign.

Run:  python demos/strategy_schedule.py
"""

import numpy as np

from delaris import exponential, mean_gamma
from delaris.sweeps import baseline_params


def main() -> None:
    for case in ("I", "II"):
        params = baseline_params("exponential", case)
        cons = params.constants
        print(f"case {case}: E[gamma] = {mean_gamma(params.dist):.4f}, "
              f"kappa = {cons.kappa:.6f} (A={cons.A:.6f}, B={cons.B:.6f}, C={cons.C:.6f})")
        print(f"{'t':>6} {'q_hat':>12} {'pi_amount':>12}")
        for t in np.linspace(0.0, params.horizon, 9):
            q, pi = exponential.strategy(params, float(t))
            print(f"{t:6.2f} {q:12.6f} {pi:12.6f}")
        print()

    params = baseline_params("exponential", "I")
    rep = exponential.sensitivity(params)
    print("sensitivity of q(0) at the case-I benchmark:")
    print(f"  dq/dalpha = {rep.d_alpha:+.6e}  (sign {rep.sign_alpha:+d})")
    print(f"  dq/dbeta  = {rep.d_beta:+.6e}  (sign {rep.sign_beta:+d})")
    print(f"  dq/dh     = {rep.d_h:+.6e}  (sign {rep.sign_h:+d})")
    print(f"  alpha* = ln(h)/h = {rep.alpha_star:.6f} "
          f"(alpha-derivative positive below, negative above)")
    if rep.h_star is not None:
        print(f"  h*     = {rep.h_star:.6f} "
              f"(beta-derivative negative below, positive above)")

    # the value surface at t=0 for a few wealth levels
    print("\naggregated value U(0, x, m1) along the benchmark memory level:")
    m1 = params.m1_0
    for x in (0.4, 0.6, 0.8, 1.0):
        u = exponential.value(params, 0.0, x, m1)
        print(f"  x = {x:.2f}: U = {u:.6f}")


if __name__ == "__main__":
    main()
