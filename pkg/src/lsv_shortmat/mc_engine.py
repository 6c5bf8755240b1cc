"""Monte Carlo simulation of the LSV model and option pricing.

The variance factor is stepped exactly as a geometric Brownian motion when
the vol-of-vol is lognormal with zero or constant drift; other combinations
fall back to full-truncation Euler and are flagged as approximate in the
sample metadata.  The asset is stepped by log-Euler with the correlated
driver.

Randomness is organised in fixed-size path blocks, each drawn from its own
counter-based Philox stream keyed by (seed, block index).  Path i therefore
depends only on the seed and its own index - never on n_paths - and blocks
may be generated on any number of workers with bit-identical results.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .black_scholes import OptionQuote, black_vega, implied_vol
from .model import (
    ConstantDrift,
    ConstantLocalVol,
    LocalVolSpec,
    LognormalVolOfVol,
    LsvModel,
    MeanRevertingDrift,
    SquareRootVolOfVol,
    TanhLocalVol,
    ZeroDrift,
    vix_spot,
)

__all__ = [
    "McConfig",
    "McSamples",
    "PriceEstimate",
    "SmilePoint",
    "simulate_paths",
    "price_european",
    "price_vix_proxy",
    "vix_exact_meanrev",
    "proxy_error_bounds",
    "smile_from_mc",
    "default_strike_grid",
    "smile_rows_to_csv",
]

_BLOCK = 16384

SMILE_CSV_HEADER = ["strike", "log_moneyness", "price", "std_error", "implied_vol", "iv_low", "iv_high"]


@dataclass(frozen=True)
class McConfig:
    """Simulation size, horizon and seeding."""

    n_paths: int
    n_steps: int
    maturity: float
    seed: int
    antithetic: bool = False

    def __post_init__(self) -> None:
        if self.n_paths < 2:
            raise ValueError("n_paths must be at least 2")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.maturity <= 0.0:
            raise ValueError("maturity must be positive")


@dataclass(frozen=True)
class McSamples:
    """Terminal spot/variance samples plus provenance.

    With antithetic sampling the arrays hold the plain paths first and their
    mirrored partners second (2 * n_paths entries in total).  terminal_s_aux
    carries the terminal values of an optional constant-vol GBM driven by the
    same increments, for control-variate pricing.
    """

    terminal_s: np.ndarray
    terminal_v: np.ndarray
    config: McConfig
    model: LsvModel
    v_scheme: str
    terminal_s_aux: np.ndarray | None = None
    aux_const_vol: float | None = None


@dataclass(frozen=True)
class PriceEstimate:
    value: float
    std_error: float
    n: int


def _eta_vec(spec: LocalVolSpec, log_m: np.ndarray) -> np.ndarray:
    """Vectorised eta as a function of log-moneyness."""
    if isinstance(spec, ConstantLocalVol):
        return np.ones_like(log_m)
    if isinstance(spec, TanhLocalVol):
        return spec.f0 + spec.f1 * np.tanh(log_m - spec.x0)
    return spec.eta0 + log_m * (spec.eta1 + log_m * (spec.eta2 + log_m * spec.eta3))


def _v_step_plan(model: LsvModel) -> tuple[str, float]:
    """Choose the variance stepping scheme; returns (scheme, mu) where mu is
    the constant lognormal drift when applicable."""
    vv = model.vol_of_vol
    if isinstance(vv, LognormalVolOfVol):
        if isinstance(vv.drift, ZeroDrift):
            return "exact-gbm", 0.0
        if isinstance(vv.drift, ConstantDrift):
            return "exact-gbm", vv.drift.mu
        return "euler-full-truncation", 0.0
    return "euler-full-truncation", 0.0


def _simulate_block(model: LsvModel, config: McConfig, block_index: int,
                    scheme: str, mu_const: float, aux_const_vol: float | None):
    """Simulate one fixed-width block of paths; always draws the full block
    so the content of path i is independent of n_paths."""
    key = (int(config.seed) % (1 << 64)) * (1 << 64) + block_index
    n_steps = config.n_steps
    dt = config.maturity / n_steps
    sq_dt = math.sqrt(dt)

    rho = model.rho
    rho_perp = math.sqrt(1.0 - rho * rho)
    vv = model.vol_of_vol
    sigma = vv.sigma
    carry = (model.r - model.q) * dt

    def run(sign: float):
        # a fresh generator per pass replays the identical stream, so the
        # antithetic partner uses exactly the mirrored increments
        rng = np.random.Generator(np.random.Philox(key=key))
        log_m = np.zeros(_BLOCK)
        v = np.full(_BLOCK, model.v0)
        log_aux = np.zeros(_BLOCK) if aux_const_vol is not None else None
        for step in range(n_steps):
            zb = rng.standard_normal((2, _BLOCK))
            z = sign * zb[0]
            b = sign * zb[1]
            dw = sq_dt * (rho * z + rho_perp * b)
            # full truncation: the clipped variance feeds every coefficient
            v_pos = v if scheme == "exact-gbm" else np.maximum(v, 0.0)
            eta = _eta_vec(model.local_vol, log_m)
            loc_var = eta * eta * v_pos
            log_m += carry - 0.5 * loc_var * dt + eta * np.sqrt(v_pos) * dw
            if log_aux is not None:
                log_aux += carry - 0.5 * aux_const_vol**2 * dt + aux_const_vol * dw
            if scheme == "exact-gbm":
                v = v * np.exp((mu_const - 0.5 * sigma * sigma) * dt + sigma * sq_dt * z)
            elif isinstance(vv, SquareRootVolOfVol):
                v = v + _sqrt_drift(vv.drift, v_pos) * dt + sigma * np.sqrt(v_pos) * sq_dt * z
            else:
                # lognormal diffusion with mean-reverting drift
                dr = vv.drift
                v = v + (dr.a * (dr.b - v_pos)) * dt + sigma * v_pos * sq_dt * z
        v_out = np.maximum(v, 1e-300) if scheme != "exact-gbm" else v
        s_out = model.s0 * np.exp(log_m)
        aux_out = model.s0 * np.exp(log_aux) if log_aux is not None else None
        return s_out, v_out, aux_out

    out = [run(1.0)]
    if config.antithetic:
        out.append(run(-1.0))
    return out


def _sqrt_drift(drift, v_pos: np.ndarray) -> np.ndarray:
    if isinstance(drift, ZeroDrift):
        return np.zeros_like(v_pos)
    if isinstance(drift, ConstantDrift):
        return drift.mu * v_pos
    if isinstance(drift, MeanRevertingDrift):
        return drift.a * (drift.b - v_pos)
    raise ValueError(f"unsupported drift {drift!r}")


def simulate_paths(model: LsvModel, config: McConfig, threads: int = 1,
                   aux_const_vol: float | None = None) -> McSamples:
    """Simulate terminal (S_T, V_T) samples.

    ``threads`` only controls how blocks are dispatched; output is
    bit-identical for any worker count.  ``aux_const_vol`` additionally
    evolves a constant-vol GBM from the same Brownian increments (a control
    variate with known Black price).
    """
    if abs(model.rho) > 1.0:
        raise ValueError("|rho| must not exceed 1")
    scheme, mu_const = _v_step_plan(model)
    n_blocks = (config.n_paths + _BLOCK - 1) // _BLOCK

    results: list = [None] * n_blocks

    def work(bi: int):
        results[bi] = _simulate_block(model, config, bi, scheme, mu_const, aux_const_vol)

    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(n_blocks)))
    else:
        for bi in range(n_blocks):
            work(bi)

    def gather(part: int, col: int):
        arr = np.concatenate([results[bi][part][col] for bi in range(n_blocks)])
        return arr[: config.n_paths]

    s = gather(0, 0)
    v = gather(0, 1)
    aux = gather(0, 2) if aux_const_vol is not None else None
    if config.antithetic:
        s = np.concatenate([s, gather(1, 0)])
        v = np.concatenate([v, gather(1, 1)])
        if aux is not None:
            aux = np.concatenate([aux, gather(1, 2)])
    return McSamples(terminal_s=s, terminal_v=v, config=config, model=model,
                     v_scheme=scheme, terminal_s_aux=aux, aux_const_vol=aux_const_vol)


def _estimate(payoff: np.ndarray, discount: float, antithetic: bool) -> PriceEstimate:
    """Discounted mean with standard error; antithetic samples are reduced to
    per-pair averages so the error bar reflects the paired estimator."""
    if payoff.size == 0:
        raise ValueError("empty sample array")
    if antithetic:
        half = payoff.size // 2
        payoff = 0.5 * (payoff[:half] + payoff[half:])
    n = payoff.size
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return PriceEstimate(value=discount * mean, std_error=discount * se, n=n)


def price_european(samples: McSamples, strike: float, is_call: bool, r: float, maturity: float) -> PriceEstimate:
    """Discounted European option price from terminal spot samples."""
    if strike < 0.0:
        raise ValueError("strike must be nonnegative")
    s = samples.terminal_s
    payoff = np.maximum(s - strike, 0.0) if is_call else np.maximum(strike - s, 0.0)
    return _estimate(payoff, math.exp(-r * maturity), samples.config.antithetic)


def vix_proxy_values(samples: McSamples, local_vol_spec: LocalVolSpec) -> np.ndarray:
    """Short-horizon VIX proxy eta(S_T) sqrt(V_T) per path."""
    log_m = np.log(samples.terminal_s / samples.model.s0)
    return _eta_vec(local_vol_spec, log_m) * np.sqrt(samples.terminal_v)


def price_vix_proxy(samples: McSamples, local_vol_spec: LocalVolSpec, strike: float,
                    is_call: bool, r: float, maturity: float) -> PriceEstimate:
    """Discounted VIX option price on the proxy eta(S_T) sqrt(V_T)."""
    if strike < 0.0:
        raise ValueError("strike must be nonnegative")
    proxy = vix_proxy_values(samples, local_vol_spec)
    payoff = np.maximum(proxy - strike, 0.0) if is_call else np.maximum(strike - proxy, 0.0)
    return _estimate(payoff, math.exp(-r * maturity), samples.config.antithetic)


def vix_exact_meanrev(samples: McSamples, mapping) -> np.ndarray:
    """Exact VIX level sqrt(alpha V_T + beta) per path for stochastic-vol
    models with mean-reverting (or constant) drift."""
    return np.sqrt(mapping.alpha * samples.terminal_v + mapping.beta)


def _sup_eta2_log_curvature(spec: TanhLocalVol) -> float:
    """sup over s of |(eta^2)''(s) s^2|, evaluated through the log-moneyness
    parameterisation where it equals |g''(x) - g'(x)| for g = eta^2."""
    x = np.linspace(-30.0, 30.0, 200001)
    t = np.tanh(x - spec.x0)
    sech2 = 1.0 - t * t
    eta = spec.f0 + spec.f1 * t
    g1 = 2.0 * eta * spec.f1 * sech2
    g2 = 2.0 * spec.f1**2 * sech2**2 + 2.0 * eta * spec.f1 * (-2.0 * sech2 * t)
    return float(np.max(np.abs(g2 - g1)))


def proxy_error_bounds(model: LsvModel, tau: float) -> tuple[float, float]:
    """Constants (C1, C2) bounding the VIX-proxy replacement error.

    C1 = 2 L M_eta |r - q| e^{|r-q| tau} tau is O(tau); C2 collects the
    variance-drift and vol-of-vol contributions and is O(sqrt(tau)).  Bounds
    exist only for specs with bounded eta, drift and vol-of-vol.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    lv = model.local_vol
    if isinstance(lv, TanhLocalVol):
        lip = abs(lv.f1)
        m_eta = lv.f0 + abs(lv.f1)
        m_eta2 = _sup_eta2_log_curvature(lv)
    elif isinstance(lv, ConstantLocalVol):
        lip = 0.0
        m_eta = 1.0
        m_eta2 = 0.0
    else:
        raise ValueError("taylor local vol is unbounded; no finite proxy bounds")
    vv = model.vol_of_vol
    if not isinstance(vv, LognormalVolOfVol):
        raise ValueError("square-root vol-of-vol is unbounded near 0; no finite proxy bounds")
    m_sigma = vv.sigma
    drift = vv.drift
    if isinstance(drift, ZeroDrift):
        m_mu = 0.0
    elif isinstance(drift, ConstantDrift):
        m_mu = abs(drift.mu)
    else:
        raise ValueError("mean-reverting drift mu(v) = a(b-v)/v is unbounded; no finite proxy bounds")

    carry = abs(model.r - model.q)
    c1 = 2.0 * lip * m_eta * carry * math.exp(carry * tau) * tau
    inner = math.exp(2.0 * tau * m_mu) * math.exp(4.0 * tau * m_sigma**2) \
        + 1.0 - 2.0 * math.exp(-tau * m_mu - 0.5 * tau * m_sigma**2)
    c2 = m_eta**2 * math.sqrt(max(inner, 0.0)) \
        + 0.5 * tau * m_eta2 * m_eta**2 * math.exp(tau * (m_mu + m_sigma**2))
    return c1, c2


@dataclass(frozen=True)
class SmilePoint:
    """One strike of an MC implied-vol smile; skip_reason is set (and the vol
    fields are NaN) when the price cannot be inverted."""

    strike: float
    log_moneyness: float
    price: float
    std_error: float
    implied_vol: float
    iv_low: float
    iv_high: float
    skip_reason: str | None = None


def default_strike_grid(samples: McSamples, product: str, count: int = 21) -> np.ndarray:
    """Log-spaced strikes covering the [1%, 99%] quantile range of the
    simulated terminals for the requested product."""
    if product == "european":
        terminals = samples.terminal_s
    elif product == "vix":
        terminals = vix_proxy_values(samples, samples.model.local_vol)
    else:
        raise ValueError("product must be 'european' or 'vix'")
    lo, hi = np.quantile(terminals, [0.01, 0.99])
    return np.exp(np.linspace(math.log(lo), math.log(hi), count))


def smile_from_mc(model: LsvModel, config: McConfig, strikes, product: str,
                  threads: int = 1, samples: McSamples | None = None) -> list[SmilePoint]:
    """Implied-vol smile from one common set of simulated paths.

    European options invert against the carry forward S0 e^{(r-q)T}; VIX
    options quote off the VIX forward, estimated as the sample mean of the
    proxy.  OTM sides are priced (call above the forward, put below) and the
    standard error is pushed through to vol space via the Black vega.
    Strikes whose price falls outside the arbitrage band are returned with a
    skip reason instead of a vol.
    """
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if strikes.size == 0:
        return []
    if product not in ("european", "vix"):
        raise ValueError("product must be 'european' or 'vix'")
    if samples is None:
        samples = simulate_paths(model, config, threads=threads)
    t = config.maturity
    if product == "european":
        forward = model.s0 * math.exp((model.r - model.q) * t)
        reference = forward
        values = samples.terminal_s
    else:
        values = vix_proxy_values(samples, model.local_vol)
        forward = float(values.mean())
        reference = vix_spot(model)
    lo_q, hi_q = np.quantile(values, [0.01, 0.99])
    undiscount = math.exp(model.r * t)

    out: list[SmilePoint] = []
    for k in strikes:
        is_call = bool(k >= forward)
        payoff = np.maximum(values - k, 0.0) if is_call else np.maximum(k - values, 0.0)
        est = _estimate(payoff, 1.0, samples.config.antithetic)  # undiscounted
        log_m = math.log(k / reference)
        price, se = est.value, est.std_error
        reason = None
        if not (lo_q <= k <= hi_q):
            reason = "strike outside the [1%, 99%] sample quantile range"
        quote = None
        if reason is None:
            try:
                quote = OptionQuote(forward=forward, strike=float(k), maturity=t,
                                    is_call=is_call, price=price)
                vol = implied_vol(quote)
            except ValueError as exc:
                reason = str(exc)
        if reason is None:
            vega = black_vega(forward, float(k), vol, t)
            band = se / vega if vega > 0.0 else math.nan
            out.append(SmilePoint(strike=float(k), log_moneyness=log_m,
                                  price=price / undiscount, std_error=se / undiscount,
                                  implied_vol=vol, iv_low=vol - band, iv_high=vol + band))
        else:
            out.append(SmilePoint(strike=float(k), log_moneyness=log_m,
                                  price=price / undiscount, std_error=se / undiscount,
                                  implied_vol=math.nan, iv_low=math.nan, iv_high=math.nan,
                                  skip_reason=reason))
    return out


def smile_rows_to_csv(rows: list[SmilePoint], fh: io.TextIOBase | None = None) -> str:
    """RFC-4180 CSV of the valid smile points (skipped strikes are omitted)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SMILE_CSV_HEADER)
    for row in rows:
        if row.skip_reason is not None:
            continue
        writer.writerow([
            f"{row.strike:.10g}", f"{row.log_moneyness:.10g}", f"{row.price:.10g}",
            f"{row.std_error:.10g}", f"{row.implied_vol:.10g}", f"{row.iv_low:.10g}",
            f"{row.iv_high:.10g}",
        ])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
