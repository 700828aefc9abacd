"""Deterministic limit quantities of the path length H(m, n), n = alpha m.

All bracket functionals come from :func:`odbgrowth.disorder.moment`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .disorder import DisorderModel, Integrand, moment
from .errors import DomainError, RegimeError

BOUNDARY_TOL = 1e-12
A_RESIDUAL_TOL = 1e-9

COMPOSITE = "composite"
PURE = "pure"
DETERMINISTIC = "deterministic"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class LimitConstants:
    alpha: float
    alpha_c: float
    alpha_c_prime: float
    regime: str
    c: float
    xi: float
    a: float = math.nan
    theta: float = math.nan
    beta: float = math.nan
    tau: float = math.nan
    tau0: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def critical_values(model: DisorderModel) -> tuple[float, float]:
    """``(alpha_c, alpha_c')``; a divergent bracket gives ``alpha_c' = 0``."""
    odds = moment(model, Integrand.ODDS)
    edge = moment(model, Integrand.EDGE_VARIANCE)
    alpha_c = math.inf if odds == 0 else 1.0 / odds
    alpha_cp = 0.0 if math.isinf(edge) else 1.0 / edge
    return alpha_c, alpha_cp


def _check_alpha(alpha):
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be a positive real, got {alpha}")


def regime_classify(model: DisorderModel, alpha: float, crit=None) -> str:
    _check_alpha(alpha)
    alpha_c, alpha_cp = crit or critical_values(model)
    for edge in (alpha_cp, alpha_c):
        if math.isfinite(edge) and abs(alpha - edge) <= BOUNDARY_TOL * max(1.0, edge):
            return BOUNDARY
    if alpha < alpha_cp:
        return COMPOSITE
    if alpha < alpha_c:
        return PURE
    return DETERMINISTIC


def _a_equation(model, alpha, gap):
    return alpha * moment(model, Integrand.A_VARIANCE, gap=gap) - 1.0


def solve_gap(model: DisorderModel, alpha: float, crit=None) -> float:
    """``a(alpha, F) - b``, kept separately because a may sit within rounding of b.

    ``a`` is the root in ``[b, 1]`` of ``alpha <p(1-p)/(a-p)^2> = 1``.  The
    bracket is strictly decreasing in ``a``, with endpoint values
    ``alpha/alpha_c' - 1 >= 0`` and ``alpha/alpha_c - 1 <= 0`` in the closed
    pure regime, so bisection (on ``log(a - b)``) cannot miss the root.
    """
    _check_alpha(alpha)
    alpha_c, alpha_cp = crit or critical_values(model)
    tol = BOUNDARY_TOL * max(1.0, alpha)
    if alpha < alpha_cp - tol or alpha > alpha_c + tol:
        raise RegimeError(
            f"a(alpha, F) needs alpha_c'={alpha_cp:.6g} <= alpha <= alpha_c={alpha_c:.6g}, got {alpha}")
    width = 1.0 - model.b
    if abs(alpha - alpha_cp) <= tol:
        return 0.0
    if abs(alpha - alpha_c) <= tol:
        return width
    lo, hi = math.log(1e-300), math.log(width)
    if _a_equation(model, alpha, 1e-300) <= 0:
        # logarithmically divergent bracket: the root is below double range
        return 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo < 1e-16:
            break
        if _a_equation(model, alpha, math.exp(mid)) > 0:
            lo = mid
        else:
            hi = mid
    gap = min(math.exp(hi), width)
    resid = abs(_a_equation(model, alpha, gap))
    if resid > A_RESIDUAL_TOL:
        raise RegimeError(f"a(alpha, F) bisection residual {resid:.3g} exceeds {A_RESIDUAL_TOL}")
    return gap


def solve_a(model: DisorderModel, alpha: float, crit=None) -> float:
    return model.b + solve_gap(model, alpha, crit)


def _composite_branch(model, alpha):
    edge = moment(model, Integrand.EDGE_ODDS)
    if math.isinf(edge):
        raise RegimeError("<p/(b-p)> diverges; composite branch undefined")
    return model.b + alpha * (1.0 - model.b) * edge


def _pure_branch(model, alpha, gap):
    a = model.b + gap
    if a >= 1.0:
        return 1.0
    return a + alpha * (1.0 - a) * moment(model, Integrand.A_ODDS, gap=gap)


def time_constant(model: DisorderModel, alpha: float, crit=None) -> float:
    """c(alpha, F) = lim H/m."""
    _check_alpha(alpha)
    crit = crit or critical_values(model)
    alpha_c, alpha_cp = crit
    # branches agree at both boundaries, so ties can go either way
    if alpha <= alpha_cp:
        return _composite_branch(model, alpha)
    if alpha < alpha_c:
        return _pure_branch(model, alpha, solve_gap(model, alpha, crit))
    return 1.0


def composite_constants(model: DisorderModel, alpha: float) -> LimitConstants:
    crit = critical_values(model)
    alpha_c, alpha_cp = crit
    regime = regime_classify(model, alpha, crit)
    if regime != COMPOSITE:
        raise RegimeError(
            f"composite regime requires 0 < alpha < alpha_c'={alpha_cp:.6g}; got alpha={alpha} ({regime})")
    b = model.b
    theta = 1.0 - alpha / alpha_cp
    beta = math.sqrt((1.0 - b) * alpha / (b**3 * theta))
    tau = math.sqrt(b * (1.0 - b) * (1.0 / alpha - 1.0 / alpha_cp))
    return LimitConstants(alpha, alpha_c, alpha_cp, regime, time_constant(model, alpha, crit),
                          1.0 - 1.0 / b, a=b, theta=theta, beta=beta, tau=tau)


def pure_tau0(model: DisorderModel, alpha: float, crit=None) -> float:
    """Annealed pure-regime scale: sqrt(Var((1-a) p / (a - p)))."""
    crit = crit or critical_values(model)
    if regime_classify(model, alpha, crit) != PURE:
        raise RegimeError(f"tau0 needs alpha_c' < alpha < alpha_c, got alpha={alpha}")
    gap = solve_gap(model, alpha, crit)
    a = model.b + gap
    mean = moment(model, Integrand.A_ODDS, gap=gap)
    second = moment(model, Integrand.CUSTOM, func=lambda p: (p / (gap + model.b - p)) ** 2)
    var = max(second - mean * mean, 0.0)
    return (1.0 - a) * math.sqrt(var)


def limit_constants(model: DisorderModel, alpha: float) -> LimitConstants:
    """Every constant that applies at ``alpha``; inapplicable ones are NaN."""
    crit = critical_values(model)
    regime = regime_classify(model, alpha, crit)
    if regime == COMPOSITE:
        return composite_constants(model, alpha)
    alpha_c, alpha_cp = crit
    xi = 1.0 - 1.0 / model.b
    c = time_constant(model, alpha, crit)
    if regime == PURE:
        return LimitConstants(alpha, alpha_c, alpha_cp, regime, c, xi,
                              a=solve_a(model, alpha, crit), tau0=pure_tau0(model, alpha, crit))
    a = 1.0 if regime == DETERMINISTIC else math.nan
    return LimitConstants(alpha, alpha_c, alpha_cp, regime, c, xi, a=a)


def speed_objective(model: DisorderModel, alpha: float, crit=None) -> float:
    return time_constant(model, alpha, crit) / (1.0 + alpha)


def flat_speed(model: DisorderModel, grid_points: int = 200, tol: float = 1e-6) -> tuple[float, float]:
    """``(speed, argmax alpha)`` for ODB started flat.

    A stalk at distance x to the left contributes ``H(t - x, x + 1)``, so with
    ``alpha = x / (t - x)`` the height grows like ``t c(alpha) / (1 + alpha)``;
    the speed is the supremum of that ratio.  ``alpha -> 0`` gives ``b``.
    """
    crit = critical_values(model)
    alpha_c = crit[0]
    cap = alpha_c if math.isfinite(alpha_c) else 1e6
    lo_edge = 1e-6
    grid = np.geomspace(lo_edge, cap, grid_points)
    vals = np.array([speed_objective(model, a, crit) for a in grid])
    k = int(np.argmax(vals))
    if vals[k] <= model.b:
        return model.b, 0.0
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = speed_objective(model, x1, crit), speed_objective(model, x2, crit)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = speed_objective(model, x2, crit)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = speed_objective(model, x1, crit)
    best = 0.5 * (lo + hi)
    return max(speed_objective(model, best, crit), vals[k]), best
