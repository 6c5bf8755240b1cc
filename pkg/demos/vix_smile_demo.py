"""Short-maturity VIX smiles: local-stochastic and pure stochastic vol.

Walks through the VIX-side capabilities:
  * ATM expansion (level, skew, convexity) of the benchmark tanh model and
    the correlation-sweep bounds on the ATM level;
  * the full rate-function VIX smile against the quadratic;
  * explicit smiles of the mean-reverting lognormal and square-root
    stochastic-vol models through the affine VIX^2 mapping.

Run:  python demos/vix_smile_demo.py
"""

import math

import numpy as np

from lsv_shortmat import (
    LognormalVolOfVol,
    LsvModel,
    TanhLocalVol,
    heston_vix_smile,
    meanrev_lognormal_vix_smile,
    rate_to_impvol,
    vix_atm_bounds,
    vix_expansion_sabr_type,
    vix_mapping,
    vix_rate,
    vix_spot,
)


def main() -> None:
    base = dict(s0=1.0, v0=0.1, local_vol=TanhLocalVol(1.0, -0.5, 0.0),
                vol_of_vol=LognormalVolOfVol(2.0))

    print("VIX smile expansions across correlations:")
    print(f"{'rho':>6} {'atm':>8} {'skew':>8} {'convexity':>10}")
    for rho in (-0.7, 0.0, 0.7):
        exp = vix_expansion_sabr_type(LsvModel(rho=rho, **base))
        print(f"{rho:>6.1f} {exp.atm:>8.4f} {exp.skew:>8.4f} {exp.convexity:>10.4f}")
    lo, hi = vix_atm_bounds(LsvModel(rho=0.0, **base))
    print(f"ATM level stays within [{lo:.4f}, {hi:.4f}] for any correlation.")

    model = LsvModel(rho=-0.7, **base)
    exp = vix_expansion_sabr_type(model)
    f0 = vix_spot(model)
    print()
    print(f"Rate-function smile vs quadratic at rho=-0.7 (forward {f0:.4f}):")
    print(f"{'log-moneyness':>14} {'quadratic':>10} {'rate solve':>10}")
    for x in np.linspace(-0.4, 0.6, 11):
        if abs(x) < 1e-12:
            quad = rate_based = exp.atm
        else:
            quad = exp.evaluate(x)
            rate_based = rate_to_impvol(vix_rate(model, f0 * math.exp(x)).rate, x)
        print(f"{x:>14.3f} {quad:>10.4f} {rate_based:>10.4f}")

    print()
    a, b, sigma, v0, tau = 2.0, 0.04, 1.5, 0.1, 30 / 365
    m = vix_mapping(a, b, tau)
    fwd = math.sqrt(m.alpha * v0 + m.beta)
    print(f"Mean-reverting lognormal factor: alpha={m.alpha:.5f}, beta={m.beta:.6f}")
    print(f"{'K/forward':>10} {'lognormal':>10} {'square-root':>12}")
    for mult in (0.85, 0.95, 1.0, 1.05, 1.15, 1.3):
        k = fwd * mult
        ln = meanrev_lognormal_vix_smile(a, b, sigma, v0, tau, k)
        sr = heston_vix_smile(a, b, sigma * math.sqrt(v0), v0, tau, k)
        print(f"{mult:>10.2f} {ln:>10.4f} {sr:>12.4f}")
    print("(lognormal slopes up from its floor; square-root slopes down)")


if __name__ == "__main__":
    main()
