"""Discrete-time ODB and two-sided DB height functions with quenched column rates.

Heights are int64 with ``NEG_INF`` as an absorbing bottom: ``max`` treats it
as the smallest value and adding an increment to it leaves it unchanged.

Site ``x`` at the step ``t -> t+1`` flips coin ``eps = [U < p_x]`` with
``U = noise_uniform(key, x, t)``; see :mod:`odbgrowth.rng`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, DomainError
from .rng import coin_from_site, coin_thresholds, noise_from_site, site_key_mixed, site_keys

NEG_INF = np.iinfo(np.int64).min
STALK = "stalk"
RING = "ring"
ODB = "odb"
DB = "db"


@dataclass(frozen=True)
class HeightProfile:
    """Heights on a half-line ``0..L-1`` (stalk) or a ring of width ``W``.

    On the half-line every site outside ``0..L-1`` counts as ``NEG_INF``.
    """

    topology: str
    heights: np.ndarray
    t: int = 0

    def __post_init__(self):
        if self.topology not in (STALK, RING):
            raise ConfigError(f"unknown topology {self.topology!r}")
        h = np.array(self.heights, dtype=np.int64)
        if h.ndim != 1 or h.size == 0:
            raise ConfigError("profile needs at least one site")
        if self.topology == RING and h.size < 2:
            raise ConfigError("ring width must be at least 2")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @classmethod
    def stalk(cls, length: int) -> "HeightProfile":
        h = np.full(length, NEG_INF, dtype=np.int64)
        h[0] = 0
        return cls(STALK, h, 0)

    @classmethod
    def flat(cls, width: int, level: int = 0) -> "HeightProfile":
        return cls(RING, np.full(width, level, dtype=np.int64), 0)

    def finite(self) -> np.ndarray:
        """Heights as floats with ``-inf`` for the sentinel."""
        out = self.heights.astype(float)
        out[self.heights == NEG_INF] = -math.inf
        return out


@njit(cache=True, inline="always")
def _inc(h, e):
    return h if h == NEG_INF else h + e


@njit(cache=True)
def _step(h, eps, ring, two_sided):
    w = h.size
    out = np.empty_like(h)
    for x in range(w):
        best = _inc(h[x], eps[x])
        if x > 0:
            left = h[x - 1]
        elif ring:
            left = h[w - 1]
        else:
            left = NEG_INF
        if left > best:
            best = left
        if two_sided:
            if x < w - 1:
                right = h[x + 1]
            elif ring:
                right = h[0]
            else:
                right = NEG_INF
            if right > best:
                best = right
        out[x] = best
    return out


def _coins(profile, rates, noise):
    rates = np.asarray(rates, dtype=float)
    noise = np.asarray(noise, dtype=float)
    w = profile.heights.size
    if rates.shape != (w,) or noise.shape != (w,):
        raise DomainError(f"profile has {w} sites but rates {rates.shape} and noise {noise.shape}")
    return (noise < rates).astype(np.int64)


def step_odb(profile: HeightProfile, rates, noise) -> HeightProfile:
    """``h'(x) = max(h(x-1), h(x) + [U_x < p_x])`` at every site at once."""
    eps = _coins(profile, rates, noise)
    h = _step(profile.heights, eps, profile.topology == RING, False)
    return HeightProfile(profile.topology, h, profile.t + 1)


def step_db(profile: HeightProfile, rates, noise) -> HeightProfile:
    """Two-sided variant: also adopts ``h(x+1)``."""
    eps = _coins(profile, rates, noise)
    h = _step(profile.heights, eps, profile.topology == RING, True)
    return HeightProfile(profile.topology, h, profile.t + 1)


def noise_row(key: int, sites: int, t: int) -> np.ndarray:
    """Uniforms driving the step ``t -> t+1`` at sites ``0..sites-1``."""
    return _noise_row(np.uint64(key), sites, t)


@njit(cache=True)
def _noise_row(key, sites, t):
    out = np.empty(sites)
    for x in range(sites):
        out[x] = noise_from_site(site_key_mixed(key, x), t)
    return out


@njit(cache=True)
def _run_stalk(p, key, t_max, ts, xs):
    n = p.size
    thr = coin_thresholds(p)
    skeys = site_keys(key, n)
    h = np.full(n, NEG_INF, dtype=np.int64)
    h[0] = 0
    out = np.full(ts.size, NEG_INF, dtype=np.int64)
    k = 0
    for t in range(t_max + 1):
        while k < ts.size and ts[k] == t:
            x = xs[k]
            if 0 <= x < n:
                out[k] = h[x]
            k += 1
        if t == t_max:
            break
        # right to left so h[x-1] is still the time-t value
        hi = min(n - 1, t + 1)
        for x in range(hi, -1, -1):
            v = _inc(h[x], coin_from_site(skeys[x], t, thr[x]))
            if x > 0 and h[x - 1] > v:
                v = h[x - 1]
            h[x] = v
    return out


def run_stalk(rates, t_max: int, key: int, checkpoints) -> np.ndarray:
    """ODB from the stalk on sites ``0..n-1``; heights at the ``(t, x)`` checkpoints.

    Checkpoints outside the light cone or the lattice come back as ``NEG_INF``.
    """
    if t_max < 0:
        raise DomainError(f"t_max must be nonnegative, got {t_max}")
    cps = np.asarray(checkpoints, dtype=np.int64).reshape(-1, 2)
    if np.any(cps[:, 0] < 0) or np.any(cps[:, 0] > t_max):
        raise DomainError("checkpoint times must lie in [0, t_max]")
    order = np.argsort(cps[:, 0], kind="stable")
    vals = _run_stalk(np.ascontiguousarray(rates, dtype=float), np.uint64(key), int(t_max),
                      np.ascontiguousarray(cps[order, 0]), np.ascontiguousarray(cps[order, 1]))
    out = np.empty_like(vals)
    out[order] = vals
    return out


@njit(cache=True)
def stalk_table(p, key, t_max):
    """Full ``(t_max+1) x n`` table of stalk heights (small systems only)."""
    n = p.size
    thr = coin_thresholds(p)
    skeys = site_keys(key, n)
    h = np.full(n, NEG_INF, dtype=np.int64)
    h[0] = 0
    table = np.empty((t_max + 1, n), dtype=np.int64)
    for t in range(t_max + 1):
        table[t] = h
        if t == t_max:
            break
        for x in range(n - 1, -1, -1):
            v = _inc(h[x], coin_from_site(skeys[x], t, thr[x]))
            if x > 0 and h[x - 1] > v:
                v = h[x - 1]
            h[x] = v
    return table


@njit(cache=True)
def _ring_trial(p, thr, key, times, sites, two_sided):
    w = p.size
    skeys = site_keys(key, w)
    h = np.zeros(w, dtype=np.int64)
    old = np.zeros(w, dtype=np.int64)
    out = np.empty((sites.size, times.size), dtype=np.int64)
    k = 0
    t_max = times[times.size - 1]
    for t in range(t_max + 1):
        while k < times.size and times[k] == t:
            for s in range(sites.size):
                out[s, k] = h[sites[s]]
            k += 1
        if t == t_max:
            break
        if two_sided:
            old[:] = h
            for x in range(w):
                v = old[x] + coin_from_site(skeys[x], t, thr[x])
                left = old[x - 1] if x > 0 else old[w - 1]
                right = old[x + 1] if x < w - 1 else old[0]
                if left > v:
                    v = left
                if right > v:
                    v = right
                h[x] = v
        else:
            wrap = h[w - 1]
            for x in range(w - 1, 0, -1):
                v = h[x] + coin_from_site(skeys[x], t, thr[x])
                if h[x - 1] > v:
                    v = h[x - 1]
                h[x] = v
            v = h[0] + coin_from_site(skeys[0], t, thr[0])
            h[0] = wrap if wrap > v else v
    return out


@njit(cache=True)
def _ring_trials(p, keys, times, sites, two_sided):
    thr = coin_thresholds(p)
    out = np.empty((keys.size, sites.size, times.size), dtype=np.int64)
    for i in range(keys.size):
        out[i] = _ring_trial(p, thr, keys[i], times, sites, two_sided)
    return out


def geometric_checkpoints(t_max: int, per_octave: int = 1, dense: bool = False) -> np.ndarray:
    """Recording times: ``ceil(t_max 2^{-k/per_octave})`` down to 1, or every time if ``dense``."""
    if t_max < 1:
        raise DomainError(f"t_max must be positive, got {t_max}")
    if dense:
        return np.arange(1, t_max + 1, dtype=np.int64)
    ts = set()
    k = 0
    while True:
        t = math.ceil(t_max * 2.0 ** (-k / per_octave))
        ts.add(max(t, 1))
        if t <= 1:
            break
        k += 1
    return np.array(sorted(ts), dtype=np.int64)


def run_flat_ring(rates, keys, times, sites=(0,), variant: str = ODB) -> np.ndarray:
    """Heights from ``h_0 = 0`` on a ring, shape ``(trials, len(sites), len(times))``.

    ``rates`` fixes the environment (quenched); each key in ``keys`` is one
    independent noise realisation.
    """
    p = np.ascontiguousarray(rates, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ConfigError("ring width must be at least 2")
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError("ring rates must lie in [0, 1]")
    if variant not in (ODB, DB):
        raise ConfigError(f"unknown growth variant {variant!r}")
    times = np.asarray(times, dtype=np.int64)
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ConfigError("checkpoint times must be strictly increasing and nonnegative")
    sites = np.asarray(sites, dtype=np.int64)
    if np.any(sites < 0) or np.any(sites >= p.size):
        raise ConfigError("observed sites must lie on the ring")
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    return _ring_trials(p, keys, times, sites, variant == DB)
