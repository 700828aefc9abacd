"""Bernoulli matrices, the longest increasing path H(m, n), and exact oracles.

Rows are numbered from the bottom.  A path is a sequence of 1-entries with
strictly increasing row and nondecreasing column, so

    H(i, j) = max(H(i, j-1), H(i-1, j) + a_ij),   H(0, .) = H(., 0) = 0.

Entry ``(i, j)`` (1-based) is driven by the same uniform as site ``j-1`` of the
growth model at time ``i+j-2``; with that choice ``h_t(x) = H(t-x, x+1)``
holds sample by sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .disorder import Environment
from .errors import DomainError
from .fredholm import CdfTable, validate_cdf
from .growth import NEG_INF, stalk_table
from .rng import coin_from_site, coin_thresholds, site_keys

BRUTE_FORCE_CELLS = 20


@dataclass(frozen=True)
class BernoulliMatrix:
    """``bits[i-1, j-1] = a_ij``: row ``i`` counted from the bottom, column ``j``."""

    bits: np.ndarray

    def __post_init__(self):
        a = np.array(self.bits, dtype=np.uint8)
        if a.ndim != 2 or 0 in a.shape:
            raise DomainError("matrix dimensions must be positive")
        if np.any(a > 1):
            raise DomainError("matrix entries must be 0 or 1")
        a.setflags(write=False)
        object.__setattr__(self, "bits", a)

    @property
    def m(self) -> int:
        return self.bits.shape[0]

    @property
    def n(self) -> int:
        return self.bits.shape[1]


def _rates(env) -> np.ndarray:
    p = env.p if isinstance(env, Environment) else env
    p = np.ascontiguousarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("environment needs at least one column")
    if np.any(p < 0) or np.any(p > 1):
        raise DomainError("column probabilities must lie in [0, 1]")
    return p


@njit(cache=True)
def _sample_bits(p, m, key):
    n = p.size
    thr = coin_thresholds(p)
    skeys = site_keys(key, n)
    out = np.empty((m, n), dtype=np.uint8)
    for i in range(m):
        for j in range(n):
            out[i, j] = coin_from_site(skeys[j], i + j, thr[j])
    return out


def sample_matrix(env, m: int, key: int) -> BernoulliMatrix:
    """Entry ``(i, j)`` is ``[U < p_j]`` with ``U`` the growth noise at site ``j-1``, time ``i+j-2``."""
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    return BernoulliMatrix(_sample_bits(_rates(env), m, np.uint64(key)))


@njit(cache=True)
def _dp(bits):
    m, n = bits.shape
    row = np.zeros(n + 1, dtype=np.int64)
    for i in range(m):
        for j in range(1, n + 1):
            v = row[j] + bits[i, j - 1]
            if row[j - 1] > v:
                v = row[j - 1]
            row[j] = v
    return row[n]


@njit(cache=True)
def _dp_table(bits):
    m, n = bits.shape
    table = np.zeros((m + 1, n + 1), dtype=np.int64)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            table[i, j] = max(table[i, j - 1], table[i - 1, j] + bits[i - 1, j - 1])
    return table


def longest_path(matrix: BernoulliMatrix) -> int:
    """H(m, n) in O(mn) time and O(n) memory."""
    return int(_dp(matrix.bits))


def path_table(matrix: BernoulliMatrix) -> np.ndarray:
    """``(m+1) x (n+1)`` table of ``H(i, j)``."""
    return _dp_table(matrix.bits)


@njit(cache=True)
def _enumerate_longest(bits):
    """Longest chain found by walking every increasing path of 1s depth first."""
    m, n = bits.shape
    ones_i = np.empty(m * n, dtype=np.int64)
    ones_j = np.empty(m * n, dtype=np.int64)
    count = 0
    for i in range(m):
        for j in range(n):
            if bits[i, j]:
                ones_i[count] = i
                ones_j[count] = j
                count += 1
    best = 0
    stack_cell = np.empty(count + 1, dtype=np.int64)
    stack_next = np.empty(count + 1, dtype=np.int64)
    for start in range(count):
        depth = 0
        stack_cell[0] = start
        stack_next[0] = 0
        while depth >= 0:
            if depth + 1 > best:
                best = depth + 1
            c = stack_cell[depth]
            k = stack_next[depth]
            advanced = False
            while k < count:
                if ones_i[k] > ones_i[c] and ones_j[k] >= ones_j[c]:
                    stack_next[depth] = k + 1
                    depth += 1
                    stack_cell[depth] = k
                    stack_next[depth] = 0
                    advanced = True
                    break
                k += 1
            if not advanced:
                depth -= 1
    return best


def enumerate_longest_path(matrix: BernoulliMatrix) -> int:
    """H by exhaustive enumeration of increasing paths; an oracle for tiny matrices."""
    return int(_enumerate_longest(matrix.bits))


@njit(cache=True)
def _brute_force(p, m):
    n = p.size
    cells = m * n
    mass = np.zeros(m + 1)
    comp = np.zeros(m + 1)
    bits = np.zeros((m, n), dtype=np.uint8)
    for mask in range(1 << cells):
        w = 1.0
        for c in range(cells):
            i = c // n
            j = c % n
            b = (mask >> c) & 1
            bits[i, j] = b
            w *= p[j] if b else 1.0 - p[j]
        h = _dp(bits)
        # Neumaier summation per bucket
        s = mass[h]
        t = s + w
        if abs(s) >= abs(w):
            comp[h] += (s - t) + w
        else:
            comp[h] += (w - t) + s
        mass[h] = t
    return mass + comp


def brute_force_cdf(env, m: int) -> CdfTable:
    """Exact ``P(H <= h)`` by summing over all ``2^{mn}`` matrices (``mn <= 20``)."""
    p = _rates(env)
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    if m * p.size > BRUTE_FORCE_CELLS:
        raise DomainError(f"brute force needs m*n <= {BRUTE_FORCE_CELLS}, got {m * p.size}")
    pmf = _brute_force(p, m)
    total = float(pmf.sum())
    if abs(total - 1.0) > 1e-12:
        raise DomainError(f"enumerated mass {total!r} differs from 1")
    values = validate_cdf(np.cumsum(pmf), "brute-force")
    return CdfTable(m, p.size, values, "brute-force")


@dataclass(frozen=True)
class CouplingResult:
    ok: bool
    checked: int
    first_violation: tuple | None = None


def coupling_check(env, m: int, key: int) -> CouplingResult:
    """Compare ODB from the stalk with the path DP on shared noise.

    Checks ``h_t(x) = H(t-x, x+1)`` for ``0 <= x < n`` and ``1 <= t-x <= m``,
    plus the light cone: ``h_t(x) = 0`` at ``t = x`` and ``NEG_INF`` for ``x > t``.
    """
    p = _rates(env)
    n = p.size
    table = stalk_table(p, np.uint64(key), m + n - 1)
    H = path_table(sample_matrix(p, m, key))
    t, x = np.meshgrid(np.arange(m + n), np.arange(n), indexing="ij")
    inside = (t - x <= m)
    want = np.full(t.shape, NEG_INF, dtype=np.int64)
    cone = x <= t
    want[cone] = H[np.minimum(t - x, m)[cone], x[cone] + 1]
    bad = np.argwhere(inside & (table != want))
    checked = int(inside.sum())
    if bad.size:
        # report the first violation in (t, x) order
        ti, xi = bad[0]
        return CouplingResult(False, checked, (int(ti), int(xi), int(table[ti, xi]), int(want[ti, xi])))
    return CouplingResult(True, checked)


@njit(cache=True)
def _sample_h(p, thr, m, key):
    n = p.size
    skeys = site_keys(key, n)
    row = np.zeros(n + 1, dtype=np.int64)
    for i in range(m):
        for j in range(1, n + 1):
            v = row[j] + coin_from_site(skeys[j - 1], i + j - 1, thr[j - 1])
            if row[j - 1] > v:
                v = row[j - 1]
            row[j] = v
    return row[n]


@njit(cache=True)
def _sample_h_many(p, m, keys):
    thr = coin_thresholds(p)
    out = np.empty(keys.size, dtype=np.int64)
    for t in range(keys.size):
        out[t] = _sample_h(p, thr, m, keys[t])
    return out


def sample_h(env, m: int, keys) -> np.ndarray:
    """H(m, n) for each noise key on one fixed environment, without storing matrices."""
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    return _sample_h_many(_rates(env), int(m), np.ascontiguousarray(keys, dtype=np.uint64))
