"""Closed-form at-the-money smile expansions and ATM price limits.

For each vol-of-vol family the asymptotic implied-vol smile is expanded to
second order in log-moneyness,

    sigma(k) = atm + skew * k + convexity * k^2 + O(k^3),

around the money (spot S0 for European options, eta(S0) sqrt(V0) for VIX
options).  The VIX convexity numerator for the lognormal family is a long
degree-7 polynomial in sigma whose coefficients are transcribed in
:func:`vix_convexity_numerator_coeffs`; a double-entry copy of that table
lives in the test suite to guard against transcription slips.

The module also carries the explicit VIX smiles of the mean-reverting
lognormal and square-root stochastic-vol models (through the affine mapping
VIX^2 = alpha(tau) V_T + beta(tau)) and the square-root-of-maturity ATM
price limits for both products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    LognormalVolOfVol,
    LsvModel,
    SquareRootVolOfVol,
    eta_log_coeffs,
)

__all__ = [
    "SmileExpansion",
    "VixMapping",
    "vix_mapping",
    "constant_drift_factor",
    "european_expansion_sabr_type",
    "vix_expansion_sabr_type",
    "vix_convexity_numerator_coeffs",
    "vix_atm_bounds",
    "european_expansion_heston_type",
    "vix_expansion_heston_type",
    "meanrev_lognormal_vix_smile",
    "heston_vix_smile",
    "atm_price_limit_european",
    "atm_price_limit_vix",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SmileExpansion:
    """ATM level, skew and convexity of an asymptotic smile.

    convexity is None where no closed form exists (VIX smile of the
    square-root family), never silently zero.
    """

    atm: float
    skew: float
    convexity: float | None
    kind: str

    def evaluate(self, log_moneyness: float) -> float:
        """Quadratic (or linear, if convexity is unavailable) smile value."""
        k = log_moneyness
        out = self.atm + self.skew * k
        if self.convexity is not None:
            out += self.convexity * k * k
        return out


@dataclass(frozen=True)
class VixMapping:
    """Affine map VIX^2 = alpha * V_T + beta induced by the variance drift."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")


def vix_mapping(a: float, b: float, tau: float) -> VixMapping:
    """Mapping coefficients for mean reversion at speed a towards level b
    over an averaging window tau: alpha = (1 - e^{-a tau})/(a tau),
    beta = b (1 - alpha); a -> 0 gives the identity mapping."""
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    x = a * tau
    if abs(x) < 1e-12:
        alpha = 1.0
    else:
        alpha = -math.expm1(-x) / x
    return VixMapping(alpha=alpha, beta=b * (1.0 - alpha))


def constant_drift_factor(mu: float, tau: float) -> float:
    """VIX^2 scale factor (e^{mu tau} - 1)/(mu tau) of a constant-drift factor."""
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    x = mu * tau
    if abs(x) < 1e-12:
        return 1.0
    return math.expm1(x) / x


def _require(model: LsvModel, family) -> float:
    if not isinstance(model.vol_of_vol, family):
        raise ValueError(f"expansion requires {family.__name__}, got {type(model.vol_of_vol).__name__}")
    return model.vol_of_vol.sigma


def european_expansion_sabr_type(model: LsvModel) -> SmileExpansion:
    """European smile expansion for the lognormal vol-of-vol family."""
    sigma = _require(model, LognormalVolOfVol)
    eta0, eta1, eta2, _ = eta_log_coeffs(model.local_vol, 3)
    v0 = model.v0
    sv0 = math.sqrt(v0)
    rho = model.rho
    atm = eta0 * sv0
    skew = 0.25 * (rho * sigma + 2.0 * eta1 * sv0)
    conv = ((2.0 - 3.0 * rho * rho) * sigma * sigma
            + 4.0 * (4.0 * eta0 * eta2 - eta1 * eta1) * v0) / (48.0 * eta0 * sv0)
    return SmileExpansion(atm=atm, skew=skew, convexity=conv, kind="european_sabr_type")


def vix_convexity_numerator_coeffs(eta0: float, eta1: float, eta2: float, eta3: float,
                                   rho: float, v0: float) -> list[float]:
    """Coefficients k_0..k_7 of the VIX convexity numerator sum k_i sigma^i."""
    r2 = rho * rho
    k0 = 256.0 * eta0 * eta1**4 * v0**3.5 * (eta1**2 * eta2 - 3.0 * eta0 * eta2**2 + 3.0 * eta0 * eta1 * eta3)
    k1 = 128.0 * eta0 * eta1**3 * rho * v0**3 * (15.0 * eta0 * eta1 * eta3 - 12.0 * eta0 * eta2**2 + 5.0 * eta1**2 * eta2)
    k2 = 16.0 * eta1**2 * v0**2.5 * (
        12.0 * eta0**2 * eta1 * eta3 * (9.0 * r2 + 1.0)
        + 24.0 * eta0**2 * eta2**2 * (1.0 - 4.0 * r2)
        + 4.0 * eta0 * eta1**2 * eta2 * (15.0 * r2 - 2.0)
        + eta1**4 * (2.0 - 3.0 * r2)
    )
    k3 = 16.0 * eta1 * rho * v0**2 * (
        6.0 * eta0**2 * eta1 * eta3 * (7.0 * r2 + 3.0)
        + 6.0 * eta0**2 * eta2**2 * (4.0 - 8.0 * r2)
        + 4.0 * eta0 * eta1**2 * eta2 * (8.0 * r2 + 3.0)
        - eta1**4 * r2
    )
    k4 = 4.0 * v0**1.5 * (
        12.0 * eta0**2 * eta1 * eta3 * r2 * (2.0 * r2 + 3.0)
        + 12.0 * eta0**2 * eta2**2 * r2 * (2.0 - 3.0 * r2)
        + 4.0 * eta0 * eta1**2 * eta2 * (5.0 * r2 * r2 + 12.0 * r2 + 6.0)
        - eta1**4 * (r2 * r2 - 6.0 * r2 + 3.0)
    )
    k5 = 4.0 * rho * v0 * (
        6.0 * eta0**2 * eta3 * r2
        + 2.0 * eta0 * eta1 * eta2 * (4.0 * r2 + 9.0)
        + eta1**3 * (r2 + 3.0)
    )
    k6 = math.sqrt(v0) * (12.0 * eta0 * eta2 * r2 + eta1**2 * (3.0 * r2 + 4.0))
    k7 = eta1 * rho
    return [k0, k1, k2, k3, k4, k5, k6, k7]


def vix_expansion_sabr_type(model: LsvModel) -> SmileExpansion:
    """VIX smile expansion for the lognormal vol-of-vol family.

    The value returned in the convexity slot is the true quadratic
    coefficient of the smile: it matches a quadratic fit of the full
    rate-function smile (some widely circulated reference values for this
    quantity carry a spurious extra factor sqrt(V0)).
    """
    sigma = _require(model, LognormalVolOfVol)
    eta0, eta1, eta2, eta3 = eta_log_coeffs(model.local_vol, 3)
    v0 = model.v0
    sv0 = math.sqrt(v0)
    rho = model.rho
    d = sigma * sigma + 4.0 * eta1 * rho * sigma * sv0 + 4.0 * eta1 * eta1 * v0
    atm = 0.5 * math.sqrt(d)
    w = (sigma * sigma * eta1
         + 2.0 * rho * sigma * sv0 * (eta1 * eta1 + 2.0 * eta0 * eta2)
         + 8.0 * eta0 * eta1 * eta2 * v0)
    skew = 0.5 * sv0 * (rho * sigma + 2.0 * eta1 * sv0) / d**1.5 * w
    coeffs = vix_convexity_numerator_coeffs(eta0, eta1, eta2, eta3, rho, v0)
    k_vix = 0.0
    for i in reversed(range(8)):
        k_vix = k_vix * sigma + coeffs[i]
    conv = sv0 / 6.0 * k_vix / d**3.5
    return SmileExpansion(atm=atm, skew=skew, convexity=conv, kind="vix_sabr_type")


def vix_atm_bounds(model: LsvModel) -> tuple[float, float]:
    """Range of the ATM VIX vol as the correlation sweeps [-1, 1]."""
    sigma = _require(model, LognormalVolOfVol)
    _, eta1 = eta_log_coeffs(model.local_vol, 1)
    sv0 = math.sqrt(model.v0)
    a = abs(0.5 * sigma - eta1 * sv0)
    b = abs(0.5 * sigma + eta1 * sv0)
    return (min(a, b), max(a, b))


def european_expansion_heston_type(model: LsvModel) -> SmileExpansion:
    """European smile expansion for the square-root vol-of-vol family.

    The pure local-volatility contribution to the convexity enters with
    weight V0^2 over the common V0^(3/2) denominator (so that switching off
    the vol-of-vol reproduces the local-vol smile exactly); quadratic fits of
    the full rate-function smile confirm this scaling.
    """
    sigma = _require(model, SquareRootVolOfVol)
    eta0, eta1, eta2, _ = eta_log_coeffs(model.local_vol, 3)
    v0 = model.v0
    sv0 = math.sqrt(v0)
    rho = model.rho
    atm = eta0 * sv0
    skew = (rho * sigma + 2.0 * eta1 * v0) / (4.0 * sv0)
    conv = ((2.0 - 5.0 * rho * rho) * sigma * sigma
            + 4.0 * (4.0 * eta0 * eta2 - eta1 * eta1) * v0 * v0) / (48.0 * eta0 * v0 * sv0)
    return SmileExpansion(atm=atm, skew=skew, convexity=conv, kind="european_heston_type")


def vix_expansion_heston_type(model: LsvModel) -> SmileExpansion:
    """VIX smile expansion for the square-root family; no closed-form
    convexity is available, so it is reported as None."""
    sigma = _require(model, SquareRootVolOfVol)
    eta0, eta1, eta2, _ = eta_log_coeffs(model.local_vol, 3)
    v0 = model.v0
    sv0 = math.sqrt(v0)
    rho = model.rho
    atm = math.sqrt(0.25 * sigma * sigma + eta1 * rho * sigma * v0 + eta1 * eta1 * v0 * v0) / sv0
    d = sigma * sigma + 4.0 * eta1 * rho * sigma * v0 + 4.0 * eta1 * eta1 * v0 * v0
    num = (-sigma**4
           - 2.0 * eta1 * rho * v0 * sigma**3
           + 4.0 * sigma**2 * v0**2 * (eta1**2 + 2.0 * eta0 * eta2 * rho**2)
           + 8.0 * eta1 * rho * v0**3 * sigma * (4.0 * eta0 * eta2 + eta1**2)
           + 32.0 * eta0 * eta1**2 * eta2 * v0**4)
    skew = num / (4.0 * sv0 * d**1.5)
    return SmileExpansion(atm=atm, skew=skew, convexity=None, kind="vix_heston_type")


def meanrev_lognormal_vix_smile(a: float, b: float, sigma: float, v0: float,
                                tau: float, strike: float) -> float:
    """Asymptotic VIX implied vol in the mean-reverting lognormal model.

    The smile is sigma |log(K/F)| / |log((K^2 - beta)/(alpha v0))| with
    forward F = sqrt(alpha v0 + beta); at the money the limit is
    (sigma/2) alpha v0 / (alpha v0 + beta).  The VIX is bounded below by
    sqrt(beta), so the implied vol vanishes (returns 0) for K <= sqrt(beta).
    """
    if sigma <= 0.0 or v0 <= 0.0:
        raise ValueError("sigma and v0 must be positive")
    m = vix_mapping(a, b, tau)
    if strike * strike <= m.beta:
        return 0.0
    f = math.sqrt(m.alpha * v0 + m.beta)
    z = math.log(strike / f)
    if abs(z) < 1e-12:
        return 0.5 * sigma * m.alpha * v0 / (m.alpha * v0 + m.beta)
    denom = math.log((strike * strike - m.beta) / (m.alpha * v0))
    return sigma * abs(z) / abs(denom)


def heston_vix_smile(a: float, b: float, sigma: float, v0: float,
                     tau: float, strike: float) -> float:
    """Asymptotic VIX implied vol in the mean-reverting square-root model.

    (sigma/2) log(K/F) / (sqrt((K^2 - beta)/alpha) - sqrt(v0)) with forward
    F = sqrt(alpha v0 + beta); for the identity mapping this is exactly
    sigma/(2 sqrt(v0)) * z/(e^z - 1) in z = log(K/sqrt(v0)).
    """
    if sigma <= 0.0 or v0 <= 0.0:
        raise ValueError("sigma and v0 must be positive")
    m = vix_mapping(a, b, tau)
    if strike * strike <= m.beta:
        raise ValueError(f"strike^2 must exceed the VIX floor beta = {m.beta}")
    f = math.sqrt(m.alpha * v0 + m.beta)
    z = math.log(strike / f)
    if abs(z) < 1e-8:
        # 0/0 at the money; l'Hopital on z and the denominator in K
        return 0.5 * sigma * m.alpha * math.sqrt(v0) / (m.alpha * v0 + m.beta)
    denom = math.sqrt((strike * strike - m.beta) / m.alpha) - math.sqrt(v0)
    return 0.5 * sigma * z / denom


def atm_price_limit_european(model: LsvModel) -> float:
    """Limit of C(S0, T)/sqrt(T) as T -> 0: eta(S0) S0 sqrt(V0) / sqrt(2 pi)."""
    eta0 = eta_log_coeffs(model.local_vol, 0)[0]
    return eta0 * model.s0 * math.sqrt(model.v0) / _SQRT_2PI


def atm_price_limit_vix(model: LsvModel) -> float:
    """Limit of the ATM VIX option price over sqrt(T) as T -> 0.

    sigma(V0) is the level of the variance diffusion coefficient: the
    lognormal family contributes sigma, the square-root family
    sigma/sqrt(V0).
    """
    eta0, eta1 = eta_log_coeffs(model.local_vol, 1)
    v0 = model.v0
    rho = model.rho
    if isinstance(model.vol_of_vol, LognormalVolOfVol):
        sig_v0 = model.vol_of_vol.sigma
    elif isinstance(model.vol_of_vol, SquareRootVolOfVol):
        sig_v0 = model.vol_of_vol.sigma / math.sqrt(v0)
    else:
        raise ValueError(f"unsupported vol-of-vol spec {model.vol_of_vol!r}")
    # eta'(S0) S0 = eta1, so the local-vol leg is eta1 * eta0 * V0
    first = eta0 * 0.5 * sig_v0 * math.sqrt(v0) + eta1 * eta0 * v0 * rho
    second = eta1 * eta0 * v0 * math.sqrt(max(0.0, 1.0 - rho * rho))
    return math.sqrt(first * first + second * second) / _SQRT_2PI
