"""Column-rate distributions F on [0, b], b < 1, and quenched environments.

Two families are built in:

* ``power-edge``: ``F(s) = 1 - ((b - s) / b)**eta`` on ``[0, b]``, so the
  distance to the edge ``q = b - p`` has tail ``G(x) = (x / b)**eta``.  With
  ``b = 1/2`` this is ``F(s) = 1 - (1 - 2s)**eta``.
* atoms (``point-mass`` for one atom, ``tabulated`` otherwise): a finite list
  of ``(value, probability)`` pairs; ``b`` is the largest value.

Bracket functionals ``<f(p)>`` are integrals against ``dF``; see :func:`moment`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError
from .rng import Stream

QUAD_TOL = 1e-10


class Integrand(str, Enum):
    """Named bracket integrands. ``A`` variants take the extra parameter ``a``."""

    ODDS = "p/(1-p)"
    EDGE_VARIANCE = "p(1-p)/(b-p)^2"
    EDGE_ODDS = "p/(b-p)"
    A_VARIANCE = "p(1-p)/(a-p)^2"
    A_ODDS = "p/(a-p)"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DisorderModel:
    family: str
    b: float
    eta: float | None = None
    atoms: tuple[tuple[float, float], ...] = ()
    # analytic hypotheses on G near 0: (a)-(c) and (a')-(b')
    weak_conditions: bool = False
    strong_conditions: bool = False

    @property
    def is_continuous(self) -> bool:
        return self.family == "power-edge"

    def cdf(self, s):
        """F(s) = P(p <= s)."""
        s = np.asarray(s, dtype=float)
        if self.is_continuous:
            x = np.clip((self.b - s) / self.b, 0.0, 1.0)
            return np.where(s < 0, 0.0, 1.0 - x**self.eta)
        vals, probs = self._atom_arrays()
        return (probs[None, :] * (vals[None, :] <= s.reshape(-1, 1))).sum(axis=1).reshape(s.shape)

    def _atom_arrays(self):
        vals = np.array([v for v, _ in self.atoms], dtype=float)
        probs = np.array([w for _, w in self.atoms], dtype=float)
        return vals, probs

    def describe(self) -> dict:
        out = {"family": self.family, "b": self.b}
        if self.eta is not None:
            out["eta"] = self.eta
        if self.atoms:
            out["atoms"] = ";".join(f"{v!r}:{w!r}" for v, w in self.atoms)
        return out


def make_power_edge(eta: float, b: float = 0.5) -> DisorderModel:
    if not (eta > 0 and math.isfinite(eta)):
        raise DomainError(f"power-edge shape eta must be positive, got {eta}")
    if not 0 < b < 1:
        raise DomainError(f"edge b must lie in (0, 1), got {b}")
    # G(x) = (x/b)^eta is regularly varying, so (a),(b),(a') always hold;
    # (c) and (b') reduce to G(x) = o(x^2 / log^nu(1/x)), i.e. eta > 2.
    composite = eta > 2
    return DisorderModel("power-edge", float(b), eta=float(eta),
                         weak_conditions=composite, strong_conditions=composite)


def make_atoms(atoms) -> DisorderModel:
    """Finite distribution from ``(value, probability)`` pairs."""
    merged: dict[float, float] = {}
    for v, w in atoms:
        v, w = float(v), float(w)
        if w < 0 or not math.isfinite(w):
            raise DomainError(f"atom probability must be nonnegative, got {w}")
        if not 0 <= v < 1:
            raise DomainError(f"atom value must lie in [0, 1), got {v}")
        if w > 0:
            merged[v] = merged.get(v, 0.0) + w
    total = sum(merged.values())
    if not merged or abs(total - 1.0) > 1e-9:
        raise DomainError(f"atom probabilities must sum to 1, got {total}")
    items = tuple(sorted((v, w / total) for v, w in merged.items()))
    b = items[-1][0]
    if b <= 0:
        raise DomainError("distribution concentrated at 0 has no positive edge b")
    family = "point-mass" if len(items) == 1 else "tabulated"
    return DisorderModel(family, b, atoms=items)


def make_point_mass(p0: float) -> DisorderModel:
    return make_atoms([(p0, 1.0)])


def _check_x(model, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > model.b) or np.any(np.isnan(x)):
        raise DomainError(f"G is defined on [0, b=[{model.b}]], got {x}")
    return x


def g_tail(model: DisorderModel, x):
    """G(x) = 1 - F((b - x)-) = P(b - p <= x), for 0 <= x <= b."""
    x = _check_x(model, x)
    if model.is_continuous:
        return (x / model.b) ** model.eta
    vals, probs = model._atom_arrays()
    q = model.b - vals
    # right-continuous step in x
    return (probs[None, :] * (q[None, :] <= x.reshape(-1, 1) + 1e-15)).sum(axis=1).reshape(x.shape)


def g_inverse(model: DisorderModel, y):
    """Left-continuous inverse ``sup{x : G(x) < y}``, with G^{-1}(0) = 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > 1) or np.any(np.isnan(y)):
        raise DomainError(f"G^-1 is defined on [0, 1], got {y}")
    if model.is_continuous:
        return model.b * y ** (1.0 / model.eta)
    vals, probs = model._atom_arrays()
    q = (model.b - vals)[::-1]          # ascending distances to the edge
    cum = np.cumsum(probs[::-1])
    idx = np.searchsorted(cum, y - 1e-15, side="left")
    idx = np.minimum(idx, len(q) - 1)
    return np.where(y <= 0, 0.0, q[idx])


# -- moments -----------------------------------------------------------------

def _named_integrand(tag: Integrand, b: float, gap: float):
    """Integrand as a function of q = b - p; ``gap = a - b`` for the A tags.

    Writing ``a - p`` as ``gap + q`` keeps full relative accuracy when a is
    within rounding distance of b.
    """
    if tag is Integrand.ODDS:
        return lambda q: (b - q) / (1.0 - b + q)
    if tag in (Integrand.EDGE_ODDS, Integrand.A_ODDS):
        return lambda q: (b - q) / (gap + q)
    if tag in (Integrand.EDGE_VARIANCE, Integrand.A_VARIANCE):
        return lambda q: (b - q) * (1.0 - b + q) / (gap + q) ** 2
    raise AssertionError(tag)


# (power of 1/(a - p), smooth numerator in q) for the edge and gap integrands
def _edge_parts(tag, b):
    if tag in (Integrand.EDGE_ODDS, Integrand.A_ODDS):
        return 1, lambda q: b - q
    if tag in (Integrand.EDGE_VARIANCE, Integrand.A_VARIANCE):
        return 2, lambda q: (b - q) * (1.0 - b + q)
    raise AssertionError(tag)


def _power_edge_closed_form(model, tag):
    eta, b = model.eta, model.b
    if tag is Integrand.EDGE_ODDS:
        return 1.0 / (eta - 1.0) if eta > 1 else math.inf
    if tag is Integrand.EDGE_VARIANCE:
        if eta <= 2:
            return math.inf
        return eta * ((1 - b) / (b * (eta - 2)) + (2 * b - 1) / (b * (eta - 1)) - 1 / eta)
    return None


def _quad(fn, lo, hi, **kw):
    """QUADPACK integral, or None when the error estimate is unusable."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err, *_ = integrate.quad(fn, lo, hi, epsabs=QUAD_TOL, epsrel=1e-12,
                                          limit=500, full_output=1, **kw)
    except ZeroDivisionError:
        return None
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        return None
    return val


def _gap_integral(h, k, power, b, gap):
    """``int_0^b q**power h(q) / (gap + q)**k dq`` for smooth ``h``, ``gap > 0``.

    The head ``[0, min(gap, b)]`` is rescaled to ``q = gap t``; the tail is
    integrated in ``s = log q`` with the powers combined in log space, so
    gaps down to the bottom of the double range stay finite.
    """
    head_end = min(gap, b)
    log_scale = (power + 1.0 - k) * math.log(gap)
    if log_scale > 700.0:
        return math.inf
    scale = math.exp(log_scale)
    head = _quad(lambda t: h(gap * t) / (1.0 + t) ** k, 0.0, head_end / gap,
                 weight="alg", wvar=(power, 0.0))
    if head is None:
        return None
    total = scale * head
    if head_end < b:
        def tail_fn(s):
            log_den = s + math.log1p(gap * math.exp(-s))
            return h(math.exp(s)) * math.exp(s * (power + 1.0) - k * log_den)
        tail = _quad(tail_fn, math.log(head_end), math.log(b))
        if tail is None:
            return None
        total += tail
    return total


def _local_exponent(f, x0=1e-6, x1=1e-8):
    f0, f1 = abs(f(x0)), abs(f(x1))
    if f0 == 0 or f1 == 0:
        return 0.0
    return math.log(f1 / f0) / math.log(x1 / x0)


def moment(model: DisorderModel, integrand: Integrand | str, a: float | None = None,
           func: Callable[[float], float] | None = None, closed_form: bool = True,
           gap: float | None = None) -> float:
    """``<f(p)>`` against dF.

    For the ``a`` integrands pass either ``a`` in ``[b, 1]`` or, when a is
    within rounding distance of b, ``gap = a - b`` directly.

    Divergent integrals return ``math.inf``; that is the only non-finite
    result.  Power-edge integrands singular at ``p = b`` are integrated in
    ``q = b - p`` with an algebraic weight absorbing the density
    ``q**(eta-1)`` and the singular power, so convergence is decided by the
    endpoint exponent rather than by quadrature luck.
    """
    tag = Integrand(integrand)
    b = model.b
    if tag in (Integrand.A_ODDS, Integrand.A_VARIANCE):
        if gap is None:
            if a is None or not b <= a <= 1:
                raise DomainError(f"parameter a must lie in [b, 1], got {a}")
            gap = a - b
        elif not 0 <= gap <= 1 - b:
            raise DomainError(f"gap a - b must lie in [0, 1 - b], got {gap}")
        if gap == 0:
            tag = Integrand.EDGE_ODDS if tag is Integrand.A_ODDS else Integrand.EDGE_VARIANCE
    if tag is Integrand.CUSTOM:
        if func is None:
            raise DomainError("custom integrand needs func")
        g = lambda q: func(b - q)  # noqa: E731
    else:
        g = _named_integrand(tag, b, gap or 0.0)

    if not model.is_continuous:
        total = 0.0
        for v, w in model.atoms:
            try:
                with np.errstate(divide="raise", invalid="raise"):
                    fv = float(g(b - v))
            except (ZeroDivisionError, FloatingPointError):
                return math.inf
            if not math.isfinite(fv):
                return math.inf
            total += w * fv
        return total

    eta = model.eta
    density = eta / b**eta
    if closed_form:
        cf = _power_edge_closed_form(model, tag)
        if cf is not None:
            return cf
    if tag in (Integrand.EDGE_ODDS, Integrand.EDGE_VARIANCE):
        k, smooth = _edge_parts(tag, b)
        power = eta - 1 - k
        if power <= -1:
            return math.inf
        val = _quad(smooth, 0.0, b, weight="alg", wvar=(power, 0.0))
    elif tag is Integrand.CUSTOM:
        kappa = _local_exponent(g)
        if eta - 1 + kappa <= -1 + 1e-3:
            return math.inf
        # user integrands may be singular at q = 0; keep the node set interior
        val = _quad(lambda q: q ** (eta - 1.0) * g(q), 0.0, b)
    elif tag is Integrand.ODDS:
        val = _quad(g, 0.0, b, weight="alg", wvar=(eta - 1.0, 0.0))
    else:
        k, smooth = _edge_parts(tag, b)
        val = _gap_integral(smooth, k, eta - 1.0, b, gap)
    return math.inf if val is None else density * val


# -- environments ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Environment:
    """Ordered quenched sample ``p_1 >= ... >= p_n`` with ``q`` and ``r``."""

    p: np.ndarray
    b: float
    seed: tuple = field(default=(), compare=False)

    def __post_init__(self):
        p = np.sort(np.asarray(self.p, dtype=float))[::-1].copy()
        if p.ndim != 1 or p.size == 0:
            raise DomainError("environment needs at least one column")
        if p[-1] < 0 or p[0] > self.b or p[0] >= 1:
            raise DomainError(f"rates must lie in [0, b={self.b}]")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def q(self) -> np.ndarray:
        return self.b - self.p

    @property
    def r(self) -> np.ndarray:
        return self.p / (1.0 - self.p)

    def digest(self) -> dict:
        q = self.q
        return {"q1": float(q[0]), "q2": float(q[1]) if self.n > 1 else math.nan,
                "r1": float(self.r[0])}


def sample_rates(model: DisorderModel, n: int, stream: Stream) -> np.ndarray:
    """``n`` unsorted i.i.d. draws ``p = b - G^{-1}(U)``."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n}")
    u = stream.uniforms(n)
    return model.b - g_inverse(model, u)


def sample_environment(model: DisorderModel, n: int, stream: Stream) -> Environment:
    return Environment(sample_rates(model, n, stream), model.b, seed=stream.path)
