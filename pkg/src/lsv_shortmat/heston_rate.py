"""Joint rate function for the square-root (Heston-type) variance factor.

The scaled cumulant of (integrated variance, terminal variance) for
dV = mu V dt + sigma sqrt(V) dZ has the closed form

             sqrt(2 theta)   sqrt(2 theta) tan(c) + sigma phi
    Lambda = ------------- * ---------------------------------   (theta >= 0)
                 sigma       sqrt(2 theta) - sigma phi tan(c)

with c = sigma sqrt(2 theta) / 2, and the analogous tanh expression for
theta < 0.  The joint rate function is its Legendre-Fenchel transform

    I_H(x, y) = sup_{theta, phi} [theta x + phi y - Lambda(theta, phi)],

which this module computes numerically (warm-started Newton ascent with a
Nelder-Mead fallback) and as a quartic expansion in
(log x, log y).  The variance-path rate function for a factor started at v0
is the rescaling  H(y, z) = v0 * I_H(z/v0, e^y/v0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

__all__ = [
    "CumulantPoint",
    "cumulant",
    "boundary_theta_c",
    "LegendrePoint",
    "legendre_point",
    "rate_IH_numeric",
    "rate_IH_series",
    "h_heston",
    "marginal_J1",
    "marginal_J2",
]


@dataclass(frozen=True)
class CumulantPoint:
    """Cumulant value at (theta, phi); in_domain is False past the boundary
    curves, where the value is +inf."""

    theta: float
    phi: float
    sigma: float
    value: float
    in_domain: bool


def cumulant(theta: float, phi: float, sigma: float) -> CumulantPoint:
    """Evaluate the scaled cumulant, flagging out-of-domain points.

    The theta > 0 branch is written with the tangent expanded into
    sine/cosine so that nothing blows up at c = pi/2 (the pole cancels
    between numerator and denominator); the domain edge is where the
    denominator changes sign, capped at c = pi.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if theta == 0.0:
        if sigma * sigma * phi < 2.0:
            val = phi / (1.0 - sigma * sigma * phi / 2.0)
            return CumulantPoint(theta, phi, sigma, val, True)
        return CumulantPoint(theta, phi, sigma, math.inf, False)
    if theta > 0.0:
        s2t = math.sqrt(2.0 * theta)
        c = sigma * s2t / 2.0
        if c >= math.pi:
            return CumulantPoint(theta, phi, sigma, math.inf, False)
        den = s2t * math.cos(c) - sigma * phi * math.sin(c)
        if den <= 0.0:
            return CumulantPoint(theta, phi, sigma, math.inf, False)
        num = s2t * math.sin(c) + sigma * phi * math.cos(c)
        return CumulantPoint(theta, phi, sigma, (s2t / sigma) * num / den, True)
    s2t = math.sqrt(-2.0 * theta)
    t = math.tanh(sigma * s2t / 2.0)
    den = s2t - sigma * phi * t
    if den <= 0.0:
        return CumulantPoint(theta, phi, sigma, math.inf, False)
    num = sigma * phi - s2t * t
    return CumulantPoint(theta, phi, sigma, (s2t / sigma) * num / den, True)


def boundary_theta_c(phi: float, sigma: float) -> float:
    """Smallest theta > 0 on the cumulant domain boundary at fixed phi.

    Parameterised by c = sigma sqrt(2 theta)/2 in (0, pi), the boundary is
    the first zero of sqrt(2 theta) cos(c) - sigma phi sin(c).  For
    sigma^2 phi >= 2 the domain is empty already at theta = 0 and the
    function returns 0.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if sigma * sigma * phi >= 2.0:
        return 0.0

    def g(c: float) -> float:
        return (2.0 * c / sigma) * math.cos(c) - sigma * phi * math.sin(c)

    lo, hi = 1e-12, math.pi * (1.0 - 1e-14)
    if g(lo) <= 0.0 or g(hi) >= 0.0:
        return math.inf
    c_star = brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return 2.0 * c_star * c_star / (sigma * sigma)


@dataclass(frozen=True)
class LegendrePoint:
    """Result of the Legendre-Fenchel maximisation."""

    x: float
    y: float
    sigma: float
    value: float
    theta: float
    phi: float
    iterations: int
    converged: bool


def _warm_start(eps_x: float, eps_y: float, sigma: float) -> np.ndarray:
    # expansion of the maximiser around (1, 1)
    s2 = sigma * sigma
    theta = (6.0 * (2.0 * eps_x - eps_y) - 4.8 * eps_x**2 + 4.8 * eps_x * eps_y - 2.2 * eps_y**2) / s2
    phi = (-2.0 * (3.0 * eps_x - 2.0 * eps_y) - 0.6 * eps_x**2 + 1.6 * eps_x * eps_y - 0.4 * eps_y**2) / s2
    return np.array([theta, phi])


def _fd_grad_hess(f, p: np.ndarray, fp: float, h: float):
    """Central finite-difference gradient and Hessian; None if the stencil
    leaves the domain."""
    g = np.empty(2)
    H = np.empty((2, 2))
    vals = {}
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                vals[(0, 0)] = fp
                continue
            v = f(p + h * np.array([di, dj]))
            if not math.isfinite(v):
                return None, None
            vals[(di, dj)] = v
    g[0] = (vals[(1, 0)] - vals[(-1, 0)]) / (2 * h)
    g[1] = (vals[(0, 1)] - vals[(0, -1)]) / (2 * h)
    H[0, 0] = (vals[(1, 0)] - 2 * fp + vals[(-1, 0)]) / (h * h)
    H[1, 1] = (vals[(0, 1)] - 2 * fp + vals[(0, -1)]) / (h * h)
    H[0, 1] = H[1, 0] = (vals[(1, 1)] - vals[(1, -1)] - vals[(-1, 1)] + vals[(-1, -1)]) / (4 * h * h)
    return g, H


def legendre_point(x: float, y: float, sigma: float) -> LegendrePoint:
    """Maximise theta*x + phi*y - Lambda(theta, phi) over the cumulant domain.

    Newton ascent with finite-difference derivatives from the series warm
    start, backtracking to stay strictly inside the domain; Nelder-Mead mops
    up if Newton stalls.  Raises if neither converges.
    """
    if x <= 0.0 or y <= 0.0:
        raise ValueError("transform arguments must be positive")

    def f(p: np.ndarray) -> float:
        cp = cumulant(p[0], p[1], sigma)
        if not cp.in_domain:
            return -math.inf
        return p[0] * x + p[1] * y - cp.value

    def grad_small(p: np.ndarray, fp: float, tol: float) -> bool:
        g, _ = _fd_grad_hess(f, p, fp, 1e-7 * max(1.0, float(np.max(np.abs(p)))))
        return g is not None and float(np.max(np.abs(g))) <= tol

    p = _warm_start(math.log(x), math.log(y), sigma)
    for _ in range(200):
        if math.isfinite(f(p)):
            break
        p *= 0.5
    fp = f(p)
    scale = max(1.0, abs(x), abs(y))
    iters = 0
    converged = False
    newton_ok = True
    while newton_ok and iters < 60:
        iters += 1
        h = 1e-6 * max(1.0, float(np.max(np.abs(p))))
        g, H = _fd_grad_hess(f, p, fp, h)
        if g is None:
            break
        # value error at a smooth maximum is O(|g|^2); 1e-9 leaves the value
        # accurate to machine precision while staying above FD roundoff noise
        if float(np.max(np.abs(g))) <= 1e-9 * scale:
            converged = True
            break
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = g.copy()
        if not np.all(np.isfinite(step)):
            step = g.copy()
        t = 1.0
        moved = False
        for _ in range(60):
            cand = p + t * step
            fc = f(cand)
            if math.isfinite(fc) and fc > fp:
                p, fp = cand, fc
                moved = True
                break
            t *= 0.5
        if not moved:
            newton_ok = False
    if not converged:
        res = minimize(
            lambda q: -f(np.asarray(q)),
            p,
            method="Nelder-Mead",
            options=dict(xatol=1e-12, fatol=1e-15, maxiter=6000, maxfev=6000),
        )
        iters += res.nit
        cand = np.asarray(res.x)
        fc = f(cand)
        if math.isfinite(fc) and fc >= fp:
            p, fp = cand, fc
        converged = grad_small(p, fp, 1e-6 * scale)
    if not math.isfinite(fp):
        raise RuntimeError(f"Legendre transform failed at x={x}, y={y}, sigma={sigma}")
    # the sup includes (0, 0) where the objective vanishes
    value = max(fp, 0.0)
    return LegendrePoint(x=x, y=y, sigma=sigma, value=value, theta=float(p[0]), phi=float(p[1]),
                         iterations=iters, converged=bool(converged))


def rate_IH_numeric(x: float, y: float, sigma: float) -> float:
    """Joint rate function I_H(x, y) by numerical Legendre transform."""
    pt = legendre_point(x, y, sigma)
    if not pt.converged:
        raise RuntimeError(
            f"rate transform did not converge at x={x}, y={y}: "
            f"value={pt.value}, theta={pt.theta}, phi={pt.phi}, iters={pt.iterations}"
        )
    return pt.value


def rate_IH_series(eps_x: float, eps_y: float, sigma: float) -> float:
    """Quartic expansion of I_H in (eps_x, eps_y) = (log x, log y)."""
    ex, ey = eps_x, eps_y
    quad = 6.0 * ex * ex - 6.0 * ex * ey + 2.0 * ey * ey
    cub = 2.4 * ex**3 - 0.6 * ex**2 * ey - 2.2 * ex * ey**2 + 1.2 * ey**3
    quart = (271.0 / 350.0) * ex**4 - (61.0 / 175.0) * ex**3 * ey \
        + (39.0 / 350.0) * ex**2 * ey**2 - (129.0 / 175.0) * ex * ey**3 \
        + (473.0 / 1050.0) * ey**4
    return (quad + cub + quart) / (sigma * sigma)


_SERIES_CUTOFF = 0.25


def h_heston(y: float, z: float, v0: float, sigma: float) -> float:
    """Variance-path rate function for square-root vol-of-vol.

    H(y, z) = v0 * I_H(z/v0, e^y/v0); the series is accurate and much cheaper
    near the centre, so it handles |log arguments| <= 0.25 and the numeric
    transform covers the rest.
    """
    if z <= 0.0 or v0 <= 0.0:
        raise ValueError("h_heston requires positive z and v0")
    x_arg = z / v0
    y_arg = math.exp(y) / v0
    ex, ey = math.log(x_arg), math.log(y_arg)
    if abs(ex) <= _SERIES_CUTOFF and abs(ey) <= _SERIES_CUTOFF:
        return v0 * rate_IH_series(ex, ey, sigma)
    return v0 * rate_IH_numeric(x_arg, y_arg, sigma)


def marginal_J1(eps_x: float, sigma: float) -> float:
    """Marginal rate of the time-averaged variance: inf over the terminal leg."""
    e = eps_x
    return (1.5 * e * e + 0.6 * e**3 + (271.0 / 1400.0) * e**4) / (sigma * sigma)


def marginal_J2(eps_y: float, sigma: float) -> float:
    """Marginal rate of the terminal variance: inf over the averaged leg.

    This is the quartic Taylor expansion of the exact marginal
    2 (e^(eps/2) - 1)^2 / sigma^2, with quadratic coefficient 1/2.
    """
    e = eps_y
    return (0.5 * e * e + 0.25 * e**3 + (7.0 / 96.0) * e**4) / (sigma * sigma)
