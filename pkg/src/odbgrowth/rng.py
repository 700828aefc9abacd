"""Counter-based random numbers.

Every uniform used anywhere in the package is a pure function of a 64-bit
key and a counter, so any draw can be regenerated in isolation and the
growth simulator and the matrix sampler can consume *the same* coin flips.

Scheme
------
``mix64`` is the SplitMix64 finaliser (a bijection on 64-bit words).

* A stream is identified by a key.  ``Stream.child(label)`` derives a new key
  as ``mix64(key ^ mix64(hash(label) + GAMMA))``; string labels are hashed
  with BLAKE2b (8 bytes, little endian), integers are used directly.
* ``Stream.uniforms(count)`` is the SplitMix64 sequence started at the key:
  ``u_i = top53(mix64(key + (i + 1) * GAMMA))``.
* Space-time noise for a trial key ``k`` at ``(site, time)`` is the SplitMix64
  sequence of the per-site key ``mix64(k ^ mix64(site * SITE_MULT + GAMMA))``
  evaluated at counter ``time``.  The growth model and the matrix sampler
  both call :func:`noise_uniform`, with entry ``(i, j)`` of the matrix
  (1-based, rows from the bottom) mapped to ``site = j - 1``,
  ``time = i + j - 2``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
SITE_MULT = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_GAMMA_U = np.uint64(GAMMA)
_SITE_U = np.uint64(SITE_MULT)
_M1_U = np.uint64(_M1)
_M2_U = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE_U = np.uint64(1)
_TWO_M53 = 1.0 / 9007199254740992.0


def mix64_py(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1_U
    z = (z ^ (z >> _S27)) * _M2_U
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def to_unit(z):
    """Top 53 bits of a 64-bit word as a double in [0, 1)."""
    return np.float64(z >> _S11) * _TWO_M53


@njit(cache=True, inline="always")
def site_key(key, site):
    return key ^ mix64(np.uint64(site) * _SITE_U + _GAMMA_U)


@njit(cache=True, inline="always")
def site_key_mixed(key, site):
    return mix64(site_key(key, site))


@njit(cache=True, inline="always")
def noise_from_site(skey, time):
    return to_unit(mix64(skey + (np.uint64(time) + _ONE_U) * _GAMMA_U))


@njit(cache=True, inline="always")
def coin_from_site(skey, time, threshold):
    """``[U < p]`` for the noise at ``(site, time)``, with ``threshold = ceil(p 2^53)``."""
    return 1 if (mix64(skey + (np.uint64(time) + _ONE_U) * _GAMMA_U) >> _S11) < threshold else 0


@njit(cache=True)
def coin_thresholds(p):
    out = np.empty(p.size, dtype=np.uint64)
    for i in range(p.size):
        v = math.ceil(p[i] * 9007199254740992.0)
        out[i] = np.uint64(min(max(v, 0.0), 9007199254740992.0))
    return out


@njit(cache=True)
def site_keys(key, sites):
    out = np.empty(sites, dtype=np.uint64)
    for x in range(sites):
        out[x] = site_key_mixed(key, x)
    return out


@njit(cache=True)
def noise_uniform(key, site, time):
    return noise_from_site(site_key_mixed(key, site), time)


@njit(cache=True)
def _sequence(key, start, count):
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        out[i] = to_unit(mix64(key + (np.uint64(start + i) + _ONE_U) * _GAMMA_U))
    return out


def _label_word(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("integer stream labels must be nonnegative")
        return int(label) & MASK64
    data = str(label).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class Stream:
    """A named position in the counter-based key tree."""

    key: int
    path: tuple = ()

    @classmethod
    def from_seed(cls, seed: int) -> "Stream":
        return cls(mix64_py(int(seed) & MASK64), (int(seed),))

    def child(self, *labels) -> "Stream":
        key = self.key
        for label in labels:
            key = mix64_py(key ^ mix64_py(_label_word(label) + GAMMA))
        return Stream(key, self.path + tuple(labels))

    @property
    def ukey(self) -> np.uint64:
        return np.uint64(self.key)

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        return _sequence(self.ukey, start, count)

    def noise(self, site: int, time: int) -> float:
        return float(noise_uniform(self.ukey, site, time))


def trial_keys(stream: Stream, trials, label: str = "trial") -> np.ndarray:
    """Keys for trials ``0..trials-1`` (or an explicit id sequence)."""
    ids = range(trials) if isinstance(trials, (int, np.integer)) else trials
    return np.array([stream.child(label, int(t)).key for t in ids], dtype=np.uint64)
