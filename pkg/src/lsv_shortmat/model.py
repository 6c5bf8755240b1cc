"""Local-stochastic volatility model specification.

The asset follows  dS/S = eta(S) sqrt(V) dW + (r - q) dt  where the variance
factor V has its own diffusion (lognormal or square-root vol-of-vol) and the
two Brownian drivers are correlated with coefficient rho.  The local-volatility
function eta is parameterised either by a bounded tanh shape, by a truncated
Taylor polynomial in log-moneyness, or held constant (pure stochastic vol).

All spec objects are frozen dataclasses: they validate on construction and the
evaluation helpers below are pure functions, so everything here is safe to
share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

from scipy.optimize import brentq

__all__ = [
    "TanhLocalVol",
    "TaylorLocalVol",
    "ConstantLocalVol",
    "LocalVolSpec",
    "ZeroDrift",
    "ConstantDrift",
    "MeanRevertingDrift",
    "DriftSpec",
    "LognormalVolOfVol",
    "SquareRootVolOfVol",
    "VolOfVolSpec",
    "LsvModel",
    "eta_eval",
    "eta_log_coeffs",
    "eta_sq_inverse",
    "eta_sq_range",
    "vix_spot",
    "check_moment_condition",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]

# Log-moneyness cap for bracketing searches on eta; eta is effectively
# constant far beyond +-50 for every supported shape.
_LOG_BRACKET_CAP = 50.0


@dataclass(frozen=True)
class TanhLocalVol:
    """Bounded local volatility eta(s) = f0 + f1 * tanh(log(s/s0) - x0).

    Requires f0 > |f1| so that eta stays strictly positive.  The function is
    strictly monotone in s whenever f1 != 0, which makes eta^2 invertible.
    """

    f0: float
    f1: float
    x0: float = 0.0

    def __post_init__(self) -> None:
        if not self.f0 > abs(self.f1):
            raise ValueError(f"tanh local vol requires f0 > |f1|, got f0={self.f0}, f1={self.f1}")


@dataclass(frozen=True)
class TaylorLocalVol:
    """Local volatility as a cubic polynomial in log-moneyness.

    eta(s) = eta0 + eta1*k + eta2*k^2 + eta3*k^3 with k = log(s/s0).
    Intended for smile-expansion work near the money; it is not guaranteed
    positive or monotone far from s0.
    """

    eta0: float
    eta1: float = 0.0
    eta2: float = 0.0
    eta3: float = 0.0

    def __post_init__(self) -> None:
        if not self.eta0 > 0.0:
            raise ValueError(f"taylor local vol requires eta0 > 0, got {self.eta0}")


@dataclass(frozen=True)
class ConstantLocalVol:
    """eta(s) = 1: pure stochastic volatility dynamics."""

    value: float = 1.0

    def __post_init__(self) -> None:
        if self.value != 1.0:
            raise ValueError("constant local vol is normalised to 1; scale V0 instead")


LocalVolSpec = Union[TanhLocalVol, TaylorLocalVol, ConstantLocalVol]


@dataclass(frozen=True)
class ZeroDrift:
    """Driftless variance factor."""


@dataclass(frozen=True)
class ConstantDrift:
    """dV/V drift equal to a constant mu (per year)."""

    mu: float


@dataclass(frozen=True)
class MeanRevertingDrift:
    """Drift mu(V) V = a (b - V): mean reversion at speed a towards level b."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if self.a <= 0.0 or self.b <= 0.0:
            raise ValueError("mean-reverting drift requires a > 0 and b > 0")


DriftSpec = Union[ZeroDrift, ConstantDrift, MeanRevertingDrift]


@dataclass(frozen=True)
class LognormalVolOfVol:
    """Variance diffusion dV/V = sigma dZ + drift: lognormal (SABR-type) factor."""

    sigma: float
    drift: DriftSpec = field(default_factory=ZeroDrift)

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError("vol-of-vol sigma must be positive")


@dataclass(frozen=True)
class SquareRootVolOfVol:
    """Variance diffusion dV = sigma sqrt(V) dZ + drift terms: Heston-type factor."""

    sigma: float
    drift: DriftSpec = field(default_factory=ZeroDrift)

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError("vol-of-vol sigma must be positive")


VolOfVolSpec = Union[LognormalVolOfVol, SquareRootVolOfVol]


@dataclass(frozen=True)
class LsvModel:
    """Full model state: spot, spot variance, correlation, carry, and the two
    volatility specifications."""

    s0: float
    v0: float
    rho: float
    local_vol: LocalVolSpec
    vol_of_vol: VolOfVolSpec
    r: float = 0.0
    q: float = 0.0

    def __post_init__(self) -> None:
        if self.s0 <= 0.0:
            raise ValueError("s0 must be strictly positive")
        if self.v0 <= 0.0:
            raise ValueError("v0 must be strictly positive")
        if abs(self.rho) > 1.0:
            raise ValueError("rho must lie in [-1, 1]")


def eta_eval(spec: LocalVolSpec, s: float, s0: float) -> float:
    """Evaluate the local volatility function at spot s (with reference s0)."""
    if s <= 0.0:
        raise ValueError("spot must be strictly positive")
    if isinstance(spec, ConstantLocalVol):
        return 1.0
    k = math.log(s / s0)
    if isinstance(spec, TanhLocalVol):
        return spec.f0 + spec.f1 * math.tanh(k - spec.x0)
    return spec.eta0 + k * (spec.eta1 + k * (spec.eta2 + k * spec.eta3))


def eta_log_coeffs(spec: LocalVolSpec, order: int = 3) -> list[float]:
    """Taylor coefficients of eta in powers of log(s/s0), up to the cubic.

    For the tanh shape the coefficients follow from derivatives of tanh at
    -x0; the cubic one is the cubic Taylor coefficient, consistent with how
    the lower orders are defined.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be one of 0, 1, 2, 3")
    if isinstance(spec, ConstantLocalVol):
        coeffs = [1.0, 0.0, 0.0, 0.0]
    elif isinstance(spec, TaylorLocalVol):
        coeffs = [spec.eta0, spec.eta1, spec.eta2, spec.eta3]
    else:
        t = math.tanh(spec.x0)
        sech2 = 1.0 / math.cosh(spec.x0) ** 2
        coeffs = [
            spec.f0 - spec.f1 * t,
            spec.f1 * sech2,
            spec.f1 * sech2 * t,
            spec.f1 * (-2.0 * sech2 ** 2 + 4.0 * t ** 2 * sech2) / 6.0,
        ]
    return coeffs[: order + 1]


def eta_sq_range(spec: LocalVolSpec) -> tuple[float, float]:
    """Open range (w_min, w_max) attained by eta^2 over all positive spots."""
    if isinstance(spec, ConstantLocalVol):
        return (1.0, 1.0)
    if isinstance(spec, TanhLocalVol):
        lo = spec.f0 - abs(spec.f1)
        hi = spec.f0 + abs(spec.f1)
        return (lo * lo, hi * hi)
    # Taylor shape: range over the capped log-moneyness window, restricted to
    # the region where eta stays positive (a polynomial may cross zero; the
    # inversion only ever matches eta = +sqrt(w) there).
    a = _taylor_eval(spec, -_LOG_BRACKET_CAP)
    b = _taylor_eval(spec, _LOG_BRACKET_CAP)
    lo_eta, hi_eta = min(a, b), max(a, b)
    if hi_eta <= 0.0:
        raise ValueError("eta is not positive over the search window")
    lo_eta = max(lo_eta, 0.0)
    return (lo_eta * lo_eta, hi_eta * hi_eta)


def _taylor_eval(spec: TaylorLocalVol, k: float) -> float:
    return spec.eta0 + k * (spec.eta1 + k * (spec.eta2 + k * spec.eta3))


def _taylor_is_monotone(spec: TaylorLocalVol) -> bool:
    # eta'(k) = eta1 + 2 eta2 k + 3 eta3 k^2 must not change sign on the
    # bracketing window.
    a, b, c = 3.0 * spec.eta3, 2.0 * spec.eta2, spec.eta1
    if a == 0.0 and b == 0.0:
        return c != 0.0
    if a == 0.0:
        root = -c / b
        return abs(root) >= _LOG_BRACKET_CAP
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return True
    roots = ((-b - math.sqrt(disc)) / (2.0 * a), (-b + math.sqrt(disc)) / (2.0 * a))
    return all(abs(r) >= _LOG_BRACKET_CAP for r in roots)


def eta_sq_inverse(spec: LocalVolSpec, w: float, s0: float) -> float:
    """Solve eta(s)^2 = w for s, for strictly monotone local volatility.

    The root is bracketed by geometric expansion away from s0 (capped at
    s0 * exp(+-50)) and then solved by Brent iteration to full precision.
    The constant spec is degenerate: only w = 1 is attainable and s0 is
    returned by convention.
    """
    if w <= 0.0:
        raise ValueError("target of eta^2 inversion must be positive")
    if isinstance(spec, ConstantLocalVol):
        if abs(w - 1.0) > 1e-12:
            raise ValueError("constant local vol attains only eta^2 = 1")
        return s0
    if isinstance(spec, TanhLocalVol):
        if spec.f1 == 0.0:
            raise ValueError("tanh spec with f1 = 0 is not invertible")
    elif not _taylor_is_monotone(spec):
        raise ValueError("taylor local vol spec is not monotone; inversion unsupported")

    w_lo, w_hi = eta_sq_range(spec)
    if not (w_lo < w < w_hi):
        raise ValueError(f"eta^2 target {w} outside attainable range ({w_lo}, {w_hi})")

    target = math.sqrt(w)

    def g(k: float) -> float:
        return eta_eval(spec, s0 * math.exp(k), s0) - target

    g0 = g(0.0)
    if g0 == 0.0:
        return s0
    # expand geometrically until the sign changes
    step = 1.0
    k_prev = 0.0
    sign0 = math.copysign(1.0, g0)
    while step <= _LOG_BRACKET_CAP:
        for k_try in (step, -step):
            if math.copysign(1.0, g(k_try)) != sign0:
                lo, hi = sorted((math.copysign(k_prev, k_try), k_try))
                root = brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16)
                return s0 * math.exp(root)
        k_prev = step
        step *= 2.0
    raise ValueError("failed to bracket eta^2 inversion within the search cap")


def vix_spot(model: LsvModel) -> float:
    """Zero-maturity VIX level eta(s0) * sqrt(v0)."""
    return eta_eval(model.local_vol, model.s0, model.s0) * math.sqrt(model.v0)


def check_moment_condition(rho: float, p: float) -> bool:
    """Sufficient condition for the p-th spot moment to stay bounded at short
    maturity in the pure stochastic-vol limit: rho < -sqrt((p-1)/p)."""
    if p <= 1.0:
        raise ValueError("moment exponent p must exceed 1")
    return rho < -math.sqrt((p - 1.0) / p)


# ---------------------------------------------------------------------------
# JSON configuration
# ---------------------------------------------------------------------------

_LOCAL_VOL_KINDS = {"tanh", "taylor_log", "constant"}
_VOL_OF_VOL_KINDS = {"lognormal", "square_root"}
_DRIFT_KINDS = {"zero", "constant", "mean_reverting"}


def _local_vol_from_dict(d: dict) -> LocalVolSpec:
    kind = d.get("kind")
    if kind == "tanh":
        return TanhLocalVol(f0=float(d["f0"]), f1=float(d["f1"]), x0=float(d.get("x0", 0.0)))
    if kind == "taylor_log":
        return TaylorLocalVol(
            eta0=float(d["eta0"]),
            eta1=float(d.get("eta1", 0.0)),
            eta2=float(d.get("eta2", 0.0)),
            eta3=float(d.get("eta3", 0.0)),
        )
    if kind == "constant":
        return ConstantLocalVol()
    raise ValueError(f"unknown local_vol kind {kind!r}; expected one of {sorted(_LOCAL_VOL_KINDS)}")


def _drift_from_dict(d: dict | None) -> DriftSpec:
    if d is None:
        return ZeroDrift()
    kind = d.get("kind", "zero")
    if kind == "zero":
        return ZeroDrift()
    if kind == "constant":
        return ConstantDrift(mu=float(d["mu"]))
    if kind == "mean_reverting":
        return MeanRevertingDrift(a=float(d["a"]), b=float(d["b"]))
    raise ValueError(f"unknown drift kind {kind!r}; expected one of {sorted(_DRIFT_KINDS)}")


def _vol_of_vol_from_dict(d: dict) -> VolOfVolSpec:
    kind = d.get("kind")
    drift = _drift_from_dict(d.get("drift"))
    if kind == "lognormal":
        return LognormalVolOfVol(sigma=float(d["sigma"]), drift=drift)
    if kind == "square_root":
        return SquareRootVolOfVol(sigma=float(d["sigma"]), drift=drift)
    raise ValueError(f"unknown vol_of_vol kind {kind!r}; expected one of {sorted(_VOL_OF_VOL_KINDS)}")


def model_from_dict(cfg: dict) -> LsvModel:
    """Build a model from the JSON configuration layout."""
    return LsvModel(
        s0=float(cfg["s0"]),
        v0=float(cfg["v0"]),
        rho=float(cfg["rho"]),
        r=float(cfg.get("r", 0.0)),
        q=float(cfg.get("q", 0.0)),
        local_vol=_local_vol_from_dict(cfg["local_vol"]),
        vol_of_vol=_vol_of_vol_from_dict(cfg["vol_of_vol"]),
    )


def model_to_dict(model: LsvModel) -> dict:
    """Inverse of :func:`model_from_dict`."""
    lv = model.local_vol
    if isinstance(lv, TanhLocalVol):
        lv_d = {"kind": "tanh", "f0": lv.f0, "f1": lv.f1, "x0": lv.x0}
    elif isinstance(lv, TaylorLocalVol):
        lv_d = {"kind": "taylor_log", "eta0": lv.eta0, "eta1": lv.eta1, "eta2": lv.eta2, "eta3": lv.eta3}
    else:
        lv_d = {"kind": "constant"}
    drift = model.vol_of_vol.drift
    if isinstance(drift, ZeroDrift):
        dr_d = {"kind": "zero"}
    elif isinstance(drift, ConstantDrift):
        dr_d = {"kind": "constant", "mu": drift.mu}
    else:
        dr_d = {"kind": "mean_reverting", "a": drift.a, "b": drift.b}
    vv_kind = "lognormal" if isinstance(model.vol_of_vol, LognormalVolOfVol) else "square_root"
    return {
        "s0": model.s0,
        "v0": model.v0,
        "rho": model.rho,
        "r": model.r,
        "q": model.q,
        "local_vol": lv_d,
        "vol_of_vol": {"kind": vv_kind, "sigma": model.vol_of_vol.sigma, "drift": dr_d},
    }


def load_model(path: str) -> LsvModel:
    """Load a model from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
