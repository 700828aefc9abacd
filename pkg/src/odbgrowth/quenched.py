"""Saddle point and centering constant for a fixed environment.

The root ``u_n`` of ``(alpha/n) sum r_j / (1 + r_j u)^2 = 1/(u - 1)^2`` sits
within ``O(n^{-1/2})`` of the pole ``-1/r_1``, so everything here is written in
``delta = u + 1/r_1``, with ``1 + r_j u = (r_1 - r_j)/r_1 + r_j delta``.  That
keeps the ``j = 1`` factor exact instead of a difference of two nearly equal
numbers.  All sums over j are Neumaier-compensated.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .disorder import DisorderModel, Environment
from .errors import DomainError, NumericalAlarm, PreconditionError, RegimeError
from .limits import COMPOSITE, composite_constants, regime_classify

POLE_TOL = 1e-13
EQUATION_TOL = 1e-10


@dataclass(frozen=True)
class QuenchedConstants:
    n: int
    alpha: float
    m: float
    exists: bool
    u: float = math.nan
    delta: float = math.nan
    c: float = math.nan
    equation_residual: float = math.nan
    sigma1: float = math.nan
    sigma2: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


@njit(cache=True)
def _factors(r, delta):
    r1 = r[0]
    return (r1 - r) / r1 + r * delta


@njit(cache=True)
def _csum(x):
    s = 0.0
    comp = 0.0
    for v in x:
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
    return s + comp


@njit(cache=True)
def _equation(r, alpha, delta):
    """Left minus right side of the saddle equation, and its delta-derivative."""
    n = r.size
    d = _factors(r, delta)
    u = delta - 1.0 / r[0]
    s2 = alpha / n * _csum(r / (d * d))
    s3 = alpha / n * _csum(r * r / (d * d * d))
    w = 1.0 - u
    return s2 - 1.0 / (w * w), -2.0 * s3 - 2.0 / (w * w * w)


@njit(cache=True)
def _solve_delta(r, alpha):
    """Bisection in delta on (eps, 1/r_1), then one guarded Newton step."""
    width = 1.0 / r[0]
    lo = 1e-16 * width
    for _ in range(200):
        f_lo, _d = _equation(r, alpha, lo)
        if f_lo > 0.0:
            break
        lo *= 0.5
    hi = width
    f_hi, _d = _equation(r, alpha, hi)
    if not (f_lo > 0.0 and f_hi < 0.0):
        return math.nan, f_lo, f_hi
    tol = 1e-14 * width
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f, _d = _equation(r, alpha, mid)
        if f > 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    f, df = _equation(r, alpha, x)
    if df != 0.0:
        y = x - f / df
        if lo <= y <= hi:
            fy, _d = _equation(r, alpha, y)
            if abs(fy) <= abs(f):
                x = y
    return x, f_lo, f_hi


@njit(cache=True)
def _centering(r, alpha, delta):
    n = r.size
    d = _factors(r, delta)
    u = delta - 1.0 / r[0]
    return 1.0 / (1.0 - u) - alpha / n * u * _csum(r / d)


@njit(cache=True)
def _sigma_prime_pair(r, alpha, c, z):
    n = r.size
    d = 1.0 + r * z
    s1 = alpha / n * _csum(r / d)
    s2 = alpha / n * _csum(r * r / (d * d))
    first = _csum(np.array([s1, 1.0 / (z - 1.0), (c - 1.0) / z]))
    second = _csum(np.array([-s2, -1.0 / ((z - 1.0) ** 2), -(c - 1.0) / (z * z)]))
    return first, second


@njit(cache=True)
def _sigma_prime_pair_delta(r, alpha, c, delta):
    """Same as ``_sigma_prime_pair`` at ``z = delta - 1/r_1``, pole-exact."""
    n = r.size
    d = _factors(r, delta)
    z = delta - 1.0 / r[0]
    s1 = alpha / n * _csum(r / d)
    s2 = alpha / n * _csum(r * r / (d * d))
    first = _csum(np.array([s1, 1.0 / (z - 1.0), (c - 1.0) / z]))
    second = _csum(np.array([-s2, -1.0 / ((z - 1.0) ** 2), -(c - 1.0) / (z * z)]))
    return first, second


def _rates(env) -> np.ndarray:
    r = np.asarray(env.r if isinstance(env, Environment) else env, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise DomainError("environment needs at least one column")
    if np.any(np.diff(r) > 0):
        r = np.sort(r)[::-1]
    return np.ascontiguousarray(r)


def existence_sum(env, alpha: float) -> float:
    """``(alpha/n) sum r_j``; the saddle root exists iff this is below 1."""
    r = _rates(env)
    return float(alpha / r.size * math.fsum(r))


def solve_un(env, alpha: float, strict: bool = True) -> QuenchedConstants:
    """Saddle point ``u_n`` in ``(-1/r_1, 0)`` together with ``c_n`` and residuals.

    ``env`` is an :class:`Environment` or a descending array of ``r_j``.  With
    ``strict=False`` a missing root is reported through ``exists=False``
    instead of an exception.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be a positive real, got {alpha}")
    r = _rates(env)
    n = r.size
    m = n / alpha
    total = existence_sum(r, alpha)
    if r[0] <= 0.0 or total >= 1.0:
        if strict:
            raise PreconditionError(
                f"saddle root needs (alpha/n) sum r_j < 1 and r_1 > 0; got sum={total:.6g}, r_1={r[0]:.3g}")
        return QuenchedConstants(n, alpha, m, False)
    delta, f_lo, f_hi = _solve_delta(r, alpha)
    if math.isnan(delta):
        raise PreconditionError(
            f"saddle bracket failed: endpoint values {f_lo:.3g} (pole side), {f_hi:.3g} (u=0)")
    u = delta - 1.0 / r[0]
    resid = abs(_equation(r, alpha, delta)[0])
    if not resid <= EQUATION_TOL:
        raise NumericalAlarm(f"saddle equation residual {resid:.3g} exceeds {EQUATION_TOL:g}")
    c = _centering(r, alpha, delta)
    s1, s2 = _sigma_prime_pair_delta(r, alpha, c, delta)
    return QuenchedConstants(n, alpha, m, True, u=float(u), delta=float(delta), c=float(c),
                             equation_residual=float(resid), sigma1=float(abs(s1)), sigma2=float(abs(s2)))


def eval_cn(env, alpha: float, u: float) -> float:
    """``c(u) = 1/(1-u) - (alpha/n) sum r_j u / (1 + r_j u)``."""
    r = _rates(env)
    if u == 0.0:
        return 1.0
    return float(_centering(r, alpha, u + 1.0 / r[0]))


def _check_poles(r, z):
    gaps = [abs(z), abs(z - 1.0)]
    nz = r[r > 0]
    if nz.size:
        gaps.append(float(np.min(np.abs(z + 1.0 / nz))))
    if min(gaps) < POLE_TOL:
        raise DomainError(f"z={z!r} is within {POLE_TOL} of a pole")


def sigma_derivatives(env, alpha: float, c: float, z: float) -> tuple[float, float]:
    """``(sigma'(z), sigma''(z))`` for the log-integrand with centering ``c``."""
    r = _rates(env)
    _check_poles(r, z)
    s1, s2 = _sigma_prime_pair(r, alpha, c, z)
    return float(s1), float(s2)


def sigma(env, alpha: float, c: float, z: float) -> float:
    """``(alpha/n) sum log|1 + r_j z| + log|z - 1| - (1 - c) log|z|``."""
    r = _rates(env)
    _check_poles(r, z)
    return (alpha / r.size * math.fsum(np.log(np.abs(1.0 + r * z)))
            + math.log(abs(z - 1.0)) - (1.0 - c) * math.log(abs(z)))


def saddle_diagnostics(model: DisorderModel, env: Environment, alpha: float) -> dict:
    """Scaled distances of ``u_n`` and ``c_n`` from their leading-order forms.

    ``sqrt(n)(u_n + 1/r_1)/beta`` and ``(c(alpha,F) - c_n)/(theta q_1)``; both
    tend to 1 as n grows in the composite regime.
    """
    if regime_classify(model, alpha) != COMPOSITE:
        raise RegimeError("saddle diagnostics need the composite regime 0 < alpha < alpha_c'")
    const = composite_constants(model, alpha)
    qc = solve_un(env, alpha)
    q1 = float(env.q[0])
    return {
        "u_ratio": math.sqrt(env.n) * qc.delta / const.beta,
        "c_ratio": (const.c - qc.c) / (const.theta * q1) if q1 > 0 else math.nan,
        "u": qc.u,
        "c_n": qc.c,
        "q1": q1,
        "r1": float(env.r[0]),
        "sigma1": qc.sigma1,
        "sigma2": qc.sigma2,
        "equation_residual": qc.equation_residual,
    }
