"""Monte Carlo studies and the statistics they report.

Every trial is a pure function of its own key, derived from the master seed
as ``Stream.from_seed(seed).child(study, ...)``.  Trials are split into
contiguous chunks for the worker pool and the chunk results are concatenated
in trial order before any reduction, so a report does not depend on how many
workers produced it.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .config import ExperimentConfig
from .disorder import DisorderModel, g_inverse, sample_environment, sample_rates
from .errors import ConfigError, DomainError, RegimeError
from .growth import geometric_checkpoints, run_flat_ring
from .limits import (COMPOSITE, PURE, composite_constants, flat_speed, limit_constants,
                     pure_tau0, regime_classify, time_constant)
from .paths import sample_h
from .quenched import solve_un
from .rng import Stream, trial_keys

MIN_FIT_POINTS = 5


@dataclass
class ExperimentReport:
    study: str
    seed: int
    sample: np.ndarray = field(default_factory=lambda: np.empty(0))
    reference: np.ndarray = field(default_factory=lambda: np.empty(0))
    ks: float = math.nan
    summary: dict = field(default_factory=dict)
    columns: tuple = ()
    rows: list = field(default_factory=list)
    digest: dict = field(default_factory=dict)
    wall_seconds: float = 0.0


def ks_distance(sample, cdf) -> float:
    """Kolmogorov-Smirnov distance of a sorted sample from a continuous CDF."""
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise DomainError("KS distance needs a nonempty sample")
    if np.any(np.diff(x) < 0):
        raise DomainError("KS distance needs a sorted sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, x.size + 1)
    return float(max(np.max(i / x.size - f), np.max(f - (i - 1) / x.size), 0.0))


def fit_loglog(t, values) -> tuple[float, float, float]:
    """Least squares line through ``(log t, log value)``: slope, intercept, R^2."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < MIN_FIT_POINTS:
        raise DomainError(f"log-log fit needs at least {MIN_FIT_POINTS} points, got {t.size}")
    if np.any(t <= 0) or np.any(v <= 0):
        raise DomainError("log-log fit needs positive abscissae and values")
    x, y = np.log(t), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / total if total > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def _chunks(count: int, workers: int):
    pieces = min(count, max(1, 4 * workers))
    bounds = np.linspace(0, count, pieces + 1).astype(int)
    return [(bounds[i], bounds[i + 1]) for i in range(pieces) if bounds[i + 1] > bounds[i]]


def run_ordered(fn, keys: np.ndarray, workers: int, *args) -> np.ndarray:
    """``fn(keys[a:b], *args)`` over contiguous chunks, concatenated in key order."""
    spans = _chunks(keys.size, workers)
    if workers <= 1 or len(spans) <= 1:
        parts = [fn(keys[a:b], *args) for a, b in spans]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, keys[a:b], *args) for a, b in spans]
            parts = [f.result() for f in futures]
    return np.concatenate(parts)


def _quenched_chunk(keys, p, m):
    return sample_h(p, m, keys)


def _annealed_chunk(keys, model, n, m):
    out = np.empty(keys.size, dtype=np.int64)
    for i, key in enumerate(keys):
        trial = Stream(int(key))
        env = sample_environment(model, n, trial.child("environment"))
        out[i] = sample_h(env, m, np.array([trial.child("noise").key], dtype=np.uint64))[0]
    return out


def _edge_gap_chunk(keys, model, n):
    out = np.empty(keys.size)
    for i, key in enumerate(keys):
        p = sample_rates(model, n, Stream(int(key)).child("environment"))
        out[i] = model.b - p.max()
    return out


def _ring_chunk(keys, p, times, sites, variant):
    return run_flat_ring(p, keys, times, sites, variant)


def _base(cfg: ExperimentConfig, label: str) -> Stream:
    return Stream.from_seed(cfg.seed).child(label)


def _annealed_h(cfg, model, n):
    keys = trial_keys(_base(cfg, cfg.study or "annealed"), cfg.trials)
    return run_ordered(_annealed_chunk, keys, cfg.workers, model, n, cfg.m)


def _distribution_rows(stat):
    ecdf = np.arange(1, stat.size + 1) / stat.size
    return [(i, float(x), float(e), float(norm.cdf(x))) for i, (x, e) in enumerate(zip(stat, ecdf))]


def quenched_gaussian_study(cfg: ExperimentConfig) -> ExperimentReport:
    """One environment, independent noise: ``(H - c_n m + 2 tau sqrt(n)) / (tau sqrt(n))`` vs N(0,1)."""
    start = time.perf_counter()
    model = cfg.model()
    alpha = cfg.alpha
    if regime_classify(model, alpha) != COMPOSITE:
        raise RegimeError(f"the quenched Gaussian law needs the composite regime 0 < alpha < alpha_c'; "
                          f"alpha={alpha} is {regime_classify(model, alpha)}")
    const = composite_constants(model, alpha)
    n, m = cfg.columns, cfg.m
    base = _base(cfg, "theorem1")
    env = sample_environment(model, n, base.child("environment"))
    qc = solve_un(env, alpha)
    keys = trial_keys(base.child("noise"), cfg.trials)
    h = run_ordered(_quenched_chunk, keys, cfg.workers, np.ascontiguousarray(env.p), m)
    scale = const.tau * math.sqrt(n)
    centred = np.sort(h.astype(float)) - qc.c * m
    stat = (centred + 2.0 * scale) / scale
    unshifted = centred / scale
    ks = ks_distance(stat, norm.cdf)
    ks_raw = ks_distance(unshifted, norm.cdf)
    summary = {"ks": ks, "ks_without_shift": ks_raw, "median": float(np.median(stat)),
               "c_n": qc.c, "u_n": qc.u, "tau": const.tau, "n": n, "m": m, "trials": cfg.trials}
    return ExperimentReport("theorem1", cfg.seed, stat, norm.cdf(stat), ks, summary,
                            ("index", "statistic", "empirical_cdf", "normal_cdf"),
                            _distribution_rows(stat), env.digest(), time.perf_counter() - start)


def annealed_extremal_study(cfg: ExperimentConfig) -> ExperimentReport:
    """Fresh environment per trial: ``P(H <= floor(cm - theta m G^{-1}(s/n)))`` vs ``exp(-s)``."""
    start = time.perf_counter()
    model = cfg.model()
    alpha = cfg.alpha
    if regime_classify(model, alpha) != COMPOSITE:
        raise RegimeError(f"the extremal law needs the composite regime 0 < alpha < alpha_c'; "
                          f"alpha={alpha} is {regime_classify(model, alpha)}")
    const = composite_constants(model, alpha)
    n, m = cfg.columns, cfg.m
    h = _annealed_h(cfg.with_updates(study="theorem2"), model, n)
    rows = []
    summary = {"n": n, "m": m, "trials": cfg.trials, "c": const.c, "theta": const.theta}
    worst = 0.0
    for s in cfg.s_grid:
        threshold = math.floor(const.c * m - const.theta * m * float(g_inverse(model, min(s / n, 1.0))))
        frac = float(np.mean(h <= threshold))
        ref = math.exp(-s)
        worst = max(worst, abs(frac - ref))
        rows.append((s, threshold, frac, ref))
        summary[f"fraction_s{s:g}"] = frac
    summary["max_abs_error"] = worst
    sample = np.sort(h.astype(float))
    return ExperimentReport("theorem2", cfg.seed, sample, np.array([r[3] for r in rows]), math.nan,
                            summary, ("s", "threshold", "fraction", "exp_minus_s"), rows, {},
                            time.perf_counter() - start)


def pure_gaussian_study(cfg: ExperimentConfig) -> ExperimentReport:
    """Fresh environment per trial: ``(H - c m) / (tau0 sqrt(alpha m))`` vs N(0,1)."""
    start = time.perf_counter()
    model = cfg.model()
    alpha = cfg.alpha
    if regime_classify(model, alpha) != PURE:
        raise RegimeError(f"the annealed pure-regime law needs alpha_c' < alpha < alpha_c; "
                          f"alpha={alpha} is {regime_classify(model, alpha)}")
    tau0 = pure_tau0(model, alpha)
    if not tau0 > 0:
        raise RegimeError("tau0 = 0 (degenerate disorder): the standardized statistic is undefined")
    c = time_constant(model, alpha)
    n, m = cfg.columns, cfg.m
    h = _annealed_h(cfg.with_updates(study="pure"), model, n)
    stat = np.sort((h.astype(float) - c * m) / (tau0 * math.sqrt(alpha * m)))
    ks = ks_distance(stat, norm.cdf)
    var_ratio = float(np.var(h / math.sqrt(m), ddof=1) / (tau0**2 * alpha))
    summary = {"ks": ks, "variance_ratio": var_ratio, "tau0": tau0, "c": c, "n": n, "m": m,
               "trials": cfg.trials}
    return ExperimentReport("pure", cfg.seed, stat, norm.cdf(stat), ks, summary,
                            ("index", "statistic", "empirical_cdf", "normal_cdf"),
                            _distribution_rows(stat), {}, time.perf_counter() - start)


def edge_gap_study(cfg: ExperimentConfig) -> ExperimentReport:
    """Fresh environments of size n: ``P(q_1 <= G^{-1}(s/n))`` vs ``1 - exp(-s)``."""
    start = time.perf_counter()
    model = cfg.model()
    n = cfg.columns
    keys = trial_keys(_base(cfg, "lemma33"), cfg.trials)
    q1 = run_ordered(_edge_gap_chunk, keys, cfg.workers, model, n)
    rows = []
    summary = {"n": n, "environments": cfg.trials}
    worst = 0.0
    for s in cfg.s_grid:
        level = float(g_inverse(model, min(s / n, 1.0)))
        frac = float(np.mean(q1 <= level))
        ref = 1.0 - math.exp(-s)
        worst = max(worst, abs(frac - ref))
        rows.append((s, level, frac, ref))
        summary[f"fraction_s{s:g}"] = frac
    summary["max_abs_error"] = worst
    return ExperimentReport("lemma33", cfg.seed, np.sort(q1), np.array([r[3] for r in rows]),
                            math.nan, summary, ("s", "level", "fraction", "one_minus_exp_minus_s"),
                            rows, {}, time.perf_counter() - start)


def _ring_rates(cfg, model, label):
    explicit = cfg.explicit_rates()
    if explicit is not None:
        if len(explicit) != cfg.width:
            raise ConfigError(f"rates lists {len(explicit)} sites but width is {cfg.width}")
        return np.array(explicit)
    return sample_rates(model, cfg.width, _base(cfg, label).child("environment"))


def _ring_heights(cfg, label):
    model = cfg.model()
    p = _ring_rates(cfg, model, label)
    times = geometric_checkpoints(cfg.t_max, cfg.per_octave)
    if not 0 <= cfg.site < cfg.width:
        raise ConfigError(f"site {cfg.site} is not on a ring of width {cfg.width}")
    keys = trial_keys(_base(cfg, label).child("noise"), cfg.trials)
    sites = np.array([cfg.site], dtype=np.int64)
    heights = run_ordered(_ring_chunk, keys, cfg.workers, p, times, sites, cfg.variant)[:, 0, :]
    return model, p, times, heights


def exponent_study(cfg: ExperimentConfig) -> ExperimentReport:
    """Quenched standard deviation of ``h_t(x0)`` on a ring; slope of log sd vs log t.

    The fit drops the first decade of recorded times as transient.
    """
    start = time.perf_counter()
    model, p, times, heights = _ring_heights(cfg, "exponent")
    mean = heights.mean(axis=0)
    sd = heights.std(axis=0, ddof=1)
    keep = (times >= 10 * times[0]) & (sd > 0)
    if keep.sum() < MIN_FIT_POINTS:
        raise ConfigError(f"only {int(keep.sum())} checkpoints after the first decade; need {MIN_FIT_POINTS}")
    slope, intercept, r2 = fit_loglog(times[keep], sd[keep])
    rows = [(int(t), float(mu), float(s), bool(k)) for t, mu, s, k in zip(times, mean, sd, keep)]
    summary = {"slope": slope, "intercept": intercept, "r2": r2, "fit_points": int(keep.sum()),
               "fit_t_min": int(times[keep][0]), "width": cfg.width, "t_max": cfg.t_max,
               "trials": cfg.trials, "variant": cfg.variant}
    digest = {"p_max": float(p.max()), "p_mean": float(p.mean())}
    return ExperimentReport("exponent", cfg.seed, sd, np.empty(0), math.nan, summary,
                            ("t", "mean_height", "sd_height", "in_fit"), rows, digest,
                            time.perf_counter() - start)


def speed_study(cfg: ExperimentConfig) -> ExperimentReport:
    """Flat ring growth rate ``h_t(x0)/t`` at ``t_max`` next to the predicted speed."""
    start = time.perf_counter()
    model, p, times, heights = _ring_heights(cfg, "speed")
    rate = heights[:, -1] / times[-1]
    speed, argmax = flat_speed(model)
    observed = float(rate.mean())
    rows = [(int(t), float(mu / t)) for t, mu in zip(times, heights.mean(axis=0)) if t > 0]
    summary = {"observed_speed": observed, "predicted_speed": speed, "argmax_alpha": argmax,
               "relative_error": abs(observed - speed) / speed, "t_max": cfg.t_max, "width": cfg.width,
               "trials": cfg.trials}
    digest = {"p_max": float(p.max()), "p_mean": float(p.mean())}
    return ExperimentReport("speed", cfg.seed, np.sort(rate), np.empty(0), math.nan, summary,
                            ("t", "mean_height_over_t"), rows, digest, time.perf_counter() - start)


def time_constant_study(cfg: ExperimentConfig) -> ExperimentReport:
    """Annealed mean of ``H/m`` against ``c(alpha, F)``."""
    start = time.perf_counter()
    model = cfg.model()
    c = time_constant(model, cfg.alpha)
    n, m = cfg.columns, cfg.m
    h = _annealed_h(cfg.with_updates(study="time-constant"), model, n)
    ratio = h / m
    mean = float(ratio.mean())
    summary = {"mean_h_over_m": mean, "c": c, "relative_error": abs(mean - c) / c,
               "standard_error": float(ratio.std(ddof=1) / math.sqrt(ratio.size)),
               "n": n, "m": m, "trials": cfg.trials}
    rows = [(i, int(v), float(v / m)) for i, v in enumerate(h)]
    return ExperimentReport("time-constant", cfg.seed, np.sort(ratio), np.empty(0), math.nan, summary,
                            ("trial", "h", "h_over_m"), rows, {}, time.perf_counter() - start)


def exact_vs_empirical(env, m: int, keys: np.ndarray, table, workers: int = 1) -> dict:
    """Largest pointwise gap between an exact CDF and a quenched empirical one, in standard errors."""
    h = run_ordered(_quenched_chunk, keys, workers, np.ascontiguousarray(env.p), m)
    grid = np.arange(m + 1)
    emp = np.searchsorted(np.sort(h), grid, side="right") / h.size
    exact = table.values
    se = np.sqrt(exact * (1 - exact) / h.size)
    gap = np.abs(emp - exact)
    # where the exact probability is 0 or 1 the empirical value must match it outright
    z = np.where(se > 0, gap / np.where(se > 0, se, 1.0), np.where(gap > 0, np.inf, 0.0))
    return {"empirical": emp, "max_standard_errors": float(z.max()), "z": z}


def describe_constants(model: DisorderModel, alpha: float) -> dict:
    return limit_constants(model, alpha).as_dict()


STUDIES = {
    "study-theorem1": quenched_gaussian_study,
    "study-theorem2": annealed_extremal_study,
    "study-pure": pure_gaussian_study,
    "study-lemma33": edge_gap_study,
    "study-exponent": exponent_study,
    "study-speed": speed_study,
}
