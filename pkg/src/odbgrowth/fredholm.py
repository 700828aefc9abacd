"""Exact distribution of H(m, n) for a fixed environment as a Fredholm determinant.

``P(H <= h) = det(I - K_h)`` with

    K_h(j, k) = sum_l a_{h+j+l+1} b_{-h-k-l-1},   j, k >= 0,

where ``b_s`` are the Laurent coefficients of ``prod_j (1 + r_j z) (z-1)^m z^-m``
(support ``[-m, n]``) and ``a_s`` the coefficients of its reciprocal in the
annulus ``1 < |z| < 1/r_1``.  Because ``b_s = 0`` for ``s < -m`` the column
``k`` vanishes once ``k >= m - h``, so the determinant is exactly that of the
leading ``(m-h)`` block.  Moreover ``K_h(j, k) = K_0(j+h, k+h)``, so every
``det(I - K_h)`` is a trailing principal minor of ``I - K_0`` and one
elimination from the bottom-right corner yields all of them.

The ``b_s`` reach ``2^{m+n}`` in size while the determinant is O(1), and the
values of ``a`` on the contour span many decades, so the computation runs in
ball arithmetic (python-flint) with precision raised until every reported
probability is certified to ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from flint import acb, arb, arb_mat, arb_poly, ctx

from .disorder import Environment
from .errors import AnnulusError, DomainError, NumericalAlarm

M_START = 2**12
M_MAX = 2**18
MAX_M = 500
START_PREC = 128
MAX_PREC = 8192
GROWTH_ALARM = 1e8
CDF_SLACK = 1e-8


@dataclass(frozen=True)
class CdfTable:
    """``P(H <= h)`` for ``h = 0..m``."""

    m: int
    n: int
    values: np.ndarray
    provenance: str
    radius: np.ndarray = field(default=None, repr=False)
    flags: tuple = ()
    diagnostics: dict = field(default_factory=dict, compare=False)

    def pmf(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.values]))

    def rows(self):
        flags = self.flags or ("ok",) * (self.m + 1)
        for h in range(self.m + 1):
            yield h, float(self.values[h]), self.provenance, flags[h]


def validate_cdf(raw, provenance: str) -> np.ndarray:
    """Check range, monotonicity and terminal value, then clip to [0, 1]."""
    v = np.asarray(raw, dtype=float)
    if np.any(v < -CDF_SLACK) or np.any(v > 1 + CDF_SLACK):
        raise NumericalAlarm(f"{provenance} CDF leaves [0, 1] by more than {CDF_SLACK}")
    if np.any(np.diff(v) < -CDF_SLACK):
        raise NumericalAlarm(f"{provenance} CDF decreases by more than {CDF_SLACK}")
    if abs(v[-1] - 1.0) > CDF_SLACK:
        raise NumericalAlarm(f"{provenance} CDF ends at {v[-1]!r}, not 1")
    return np.clip(v, 0.0, 1.0)


def _rates(env) -> list[float]:
    if isinstance(env, Environment):
        r = env.r
    else:
        r = np.asarray(env, dtype=float).ravel()
    r = sorted((float(x) for x in r), reverse=True)
    if r and r[-1] < 0:
        raise DomainError("rates r_j must be nonnegative")
    return r


def _check_annulus(r):
    if r and r[0] >= 1.0:
        raise AnnulusError(
            f"r_1={r[0]:.6g} >= 1 (p_1 >= 1/2): no circle separates z=1 from the poles -1/r_j")


def _radius(r) -> arb:
    return arb(2) if not r or r[0] == 0.0 else 1 / arb(r[0]).sqrt()


def laurent_plus_over_minus(env, m: int, prec: int = START_PREC) -> list:
    """Coefficients ``b_s``, ``s = -m..n``, of ``prod (1 + r_j z) (z - 1)^m z^-m``.

    Returned as arb balls (list index ``s + m``); multiplication is exact up
    to the working precision, which grows with ``m + n`` as needed.
    """
    r = _rates(env)
    n = len(r)
    with _precision(prec):
        poly = arb_poly([1])
        for rj in r:
            poly *= arb_poly([1, arb(rj)])
        poly *= arb_poly([-1, 1]) ** m
        coeffs = list(poly.coeffs())
        coeffs += [arb(0)] * (m + n + 1 - len(coeffs))
    return coeffs


class _precision:
    def __init__(self, bits):
        self.bits = bits

    def __enter__(self):
        self.saved = ctx.prec
        ctx.prec = self.bits

    def __exit__(self, *exc):
        ctx.prec = self.saved


def _trapezoid(r, m, M, rho, lo, hi):
    """Trapezoid coefficients ``a_k`` (``lo <= k < hi``) of ``z^m (z-1)^-m / prod(1 + r_j z)``."""
    denom = arb_poly([1])
    for rj in r:
        denom *= arb_poly([1, arb(rj)])
    # the denominator on the circle is itself a DFT of its scaled coefficients
    folded = [acb(0)] * M
    scale = arb(1)
    for j, cj in enumerate(denom.coeffs()):
        folded[j % M] += cj * scale
        scale *= rho
    dv = acb.dft(folded, inverse=True)
    zs = [acb(arb(2 * k) / M).exp_pi_i() * rho for k in range(M)]
    vals = [(z / (z - 1)) ** m / (d * M) for z, d in zip(zs, dv)]
    spec = acb.dft(vals)
    out = []
    for k in range(lo, hi):
        out.append((spec[k % M] / M).real / rho**k)
    return out


def series_minus_over_plus(env, m: int, window: tuple[int, int], prec: int = START_PREC,
                           rel_tol: float = 1e-10) -> tuple[list, dict]:
    """Annulus coefficients ``a_k`` of ``z^m (z-1)^-m / prod (1 + r_j z)``, ``k`` in ``[lo, hi)``.

    Trapezoid rule on ``|z| = rho = r_1^{-1/2}`` (``rho = 2`` when ``r_1 = 0``),
    doubling the number of nodes from ``2^12`` until two successive sets agree
    to ``rel_tol`` relative to the largest coefficient (and to half the working
    precision), or differ by less than their rounding radii.  The last change
    is folded into each ball's radius.
    """
    r = _rates(env)
    _check_annulus(r)
    lo, hi = window
    if hi <= lo:
        raise DomainError(f"empty coefficient window {window}")
    with _precision(prec):
        rho = _radius(r)
        tol = min(rel_tol, 2.0 ** (-prec / 2))
        M = M_START
        while M < 4 * (hi - lo) or M < 4 * max(abs(lo), abs(hi)):
            M *= 2
        prev = _trapezoid(r, m, M, rho, lo, hi)
        while True:
            M *= 2
            if M > M_MAX:
                raise NumericalAlarm(f"contour coefficients not converged at M={M_MAX} nodes")
            cur = _trapezoid(r, m, M, rho, lo, hi)
            diffs = [abs(float((x - y).mid())) for x, y in zip(cur, prev)]
            scale = max(abs(float(x.mid())) for x in cur) or 1.0
            # stop once the change is within tolerance or hidden by rounding
            if max(diffs) <= tol * scale or all(x.overlaps(y) for x, y in zip(cur, prev)):
                break
            prev = cur
        coeffs = [x + arb(0, d) for x, d in zip(cur, diffs)]
    info = {"rho": float(rho.mid()), "M": M, "change": max(diffs) / scale}
    return coeffs, info


@dataclass(frozen=True)
class CoefficientBank:
    """Both coefficient families for one ``(environment, m)`` at one precision."""

    m: int
    n: int
    plus_over_minus: list
    minus_over_plus: list
    window: tuple
    rho: float
    M: int
    prec: int
    change: float

    def b(self, s: int):
        return self.plus_over_minus[s + self.m] if -self.m <= s <= self.n else arb(0)

    def a(self, k: int):
        lo, hi = self.window
        if not lo <= k < hi:
            raise DomainError(f"coefficient index {k} outside computed window {self.window}")
        return self.minus_over_plus[k - lo]

    def b_floats(self) -> np.ndarray:
        return np.array([float(x.mid()) for x in self.plus_over_minus])

    def a_floats(self) -> np.ndarray:
        return np.array([float(x.mid()) for x in self.minus_over_plus])


def build_bank(env, m: int, prec: int = START_PREC, window=None) -> CoefficientBank:
    if m < 0:
        raise DomainError(f"m must be nonnegative, got {m}")
    r = _rates(env)
    window = window or (0, 2 * m + 1)
    b = laurent_plus_over_minus(r, m, prec)
    a, info = series_minus_over_plus(r, m, window, prec)
    return CoefficientBank(m, len(r), b, a, tuple(window), info["rho"], info["M"], prec, info["change"])


def reciprocal_defect(bank: CoefficientBank) -> float:
    """``max_j |sum_k b_k a_{j-k} - delta_{j0}|`` over the indices the window covers."""
    lo, hi = bank.window
    worst = 0.0
    with _precision(bank.prec):
        for j in range(lo + bank.n, hi - bank.m):
            s = arb(0)
            for k in range(-bank.m, bank.n + 1):
                s += bank.b(k) * bank.a(j - k)
            worst = max(worst, abs(float(s.mid()) - (1.0 if j == 0 else 0.0)))
    return worst


def _kernel0(bank: CoefficientBank) -> arb_mat:
    """``K_0`` as the product of a Hankel block of ``a`` and a truncated block of ``b``."""
    m = bank.m
    with _precision(bank.prec):
        left = arb_mat([[bank.a(j + l + 1) for l in range(m)] for j in range(m)])
        right = arb_mat([[bank.b(-k - l - 1) for k in range(m)] for l in range(m)])
        return left * right


def kernel_matrix(env, m: int, h: int, bank: CoefficientBank | None = None) -> arb_mat:
    """The ``(m-h) x (m-h)`` block carrying ``det(I - K_h)``; empty for ``h >= m``."""
    if h >= m:
        return arb_mat(0, 0)
    if h < 0:
        raise DomainError(f"h must be nonnegative, got {h}")
    bank = bank or build_bank(env, m)
    k0 = _kernel0(bank)
    size = m - h
    return arb_mat([[k0[h + j, h + k] for k in range(size)] for j in range(size)])


def _trailing_minors(mat: arb_mat, prec: int):
    """All trailing principal minors of ``mat`` and the elimination growth factor.

    Gaussian elimination from the bottom-right corner without pivoting: the
    product of the first ``i`` pivots is the trailing ``i x i`` minor.  Ball
    arithmetic certifies the result, so the absence of pivoting is safe; the
    growth factor is reported as a conditioning diagnostic.
    """
    size = mat.nrows()
    with _precision(prec):
        rows = [[mat[size - 1 - i, size - 1 - j] for j in range(size)] for i in range(size)]
        base = max((abs(float(x.mid())) for row in rows for x in row), default=1.0) or 1.0
        largest = base
        minors = []
        det = arb(1)
        for i in range(size):
            piv = rows[i][i]
            if piv.contains(0):
                # remaining minors uncertified at this precision
                minors.extend([arb(0, math.inf)] * (size - i))
                return minors, math.inf
            det *= piv
            minors.append(det)
            inv = 1 / piv
            prow = rows[i]
            for k in range(i + 1, size):
                f = rows[k][i] * inv
                if f.is_zero():
                    continue
                rk = rows[k]
                for j in range(i + 1, size):
                    rk[j] -= f * prow[j]
                largest = max(largest, max(abs(float(x.mid())) for x in rk[i + 1:]) if i + 1 < size else 0.0)
    return minors, largest / base


def _cdf_at_precision(r, m, prec):
    bank = build_bank(r, m, prec)
    with _precision(prec):
        ident = arb_mat([[1 if i == j else 0 for j in range(m)] for i in range(m)])
        mat = ident - _kernel0(bank)
    minors, growth = _trailing_minors(mat, prec)
    # trailing minor of size i+1 is det(I - K_h) with h = m - 1 - i
    balls = [minors[m - 1 - h] for h in range(m)] + [arb(1)]
    return balls, growth, bank


def exact_cdf(env, m: int, tol: float = 1e-12, max_prec: int = MAX_PREC) -> CdfTable:
    """``P(H <= h)`` for ``h = 0..m`` from the trailing minors of ``I - K_0``.

    Precision starts at 128 bits and doubles until every value's ball radius
    is at most ``tol``.  Raises :class:`NumericalAlarm` if ``max_prec`` is not
    enough; entries whose elimination growth exceeds ``1e8`` are flagged.
    """
    r = _rates(env)
    n = len(r)
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    if m > MAX_M:
        raise DomainError(f"exact CDF is limited to m <= {MAX_M}; use Monte Carlo beyond that")
    _check_annulus(r)
    prec = START_PREC
    while True:
        balls, growth, bank = _cdf_at_precision(r, m, prec)
        radius = np.array([float(x.rad()) for x in balls])
        if np.all(radius <= tol):
            break
        if prec * 2 > max_prec:
            raise NumericalAlarm(
                f"determinant not certified to {tol} at {prec} bits (max radius {radius.max():.3g})")
        prec *= 2
    mids = np.array([float(x.mid()) for x in balls])
    values = validate_cdf(mids, "determinant")
    flag = "growth" if growth > GROWTH_ALARM else "ok"
    flags = tuple([flag] * m + ["ok"])
    diag = {"prec": prec, "M": bank.M, "rho": bank.rho, "growth": growth,
            "contour_change": bank.change, "max_radius": float(radius.max())}
    return CdfTable(m, n, values, "determinant", radius, flags, diag)
