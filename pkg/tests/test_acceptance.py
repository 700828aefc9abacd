"""Acceptance criteria at their stated scale and tolerance.

Each test prints one ``PASS``/``FAIL`` line with the measured numbers, then
asserts.  Run with ``pytest -s tests/test_acceptance.py`` to see the lines.
"""

import math
import time

import numpy as np
import pytest

from odbgrowth.cli import run
from odbgrowth.config import ExperimentConfig
from odbgrowth.disorder import Integrand, make_power_edge, moment, sample_environment
from odbgrowth.experiments import (annealed_extremal_study, edge_gap_study, exact_vs_empirical,
                                   exponent_study, quenched_gaussian_study, time_constant_study)
from odbgrowth.fredholm import exact_cdf
from odbgrowth.limits import composite_constants, critical_values
from odbgrowth.paths import (_dp, _enumerate_longest, brute_force_cdf,
                             coupling_check)
from odbgrowth.quenched import saddle_diagnostics, sigma_derivatives, solve_un
from odbgrowth.rng import Stream, trial_keys

pytestmark = pytest.mark.slow

MODEL = make_power_edge(3, 0.5)


def verdict(label, ok, detail, seconds=None):
    timing = f" [{seconds:.1f}s]" if seconds is not None else ""
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}{timing}"
    print("\n" + line)
    assert ok, line


def test_c01_coupling_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(20240101)
    bad = None
    for i in range(10_000):
        m, n = (int(v) for v in rng.integers(1, 31, 2))
        p = rng.uniform(0, 1, n)
        res = coupling_check(p, m, int(rng.integers(0, 2**63)))
        if not res.ok:
            bad = (i, m, n, res.first_violation)
            break
    secs = time.perf_counter() - start
    ok = bad is None and secs < 60
    verdict("C1 coupling identity", ok, f"10^4 instances, violation={bad}", secs)


def test_c02_oracle_equivalence():
    start = time.perf_counter()
    # every matrix with m*n <= 12: DP against exhaustive path enumeration
    shapes = [(m, n) for m in range(1, 13) for n in range(1, 13) if m * n <= 12]
    mismatches = 0
    for m, n in shapes:
        for mask in range(1 << (m * n)):
            bits = ((mask >> np.arange(m * n)) & 1).astype(np.uint8).reshape(m, n)
            if _dp(bits) != _enumerate_longest(bits):
                mismatches += 1
    # determinant against brute force on a fixed grid of environments
    grid = [[0.3], [0.05, 0.45], [0.2, 0.2, 0.2], [0.4, 0.1, 0.3, 0.25],
            [0.45, 0.01, 0.2, 0.3, 0.1, 0.35], [0.1] * 12, [0.33] * 4]
    worst = 0.0
    for p in grid:
        p = np.array(p)
        r = p / (1 - p)
        for m in range(1, 12 // p.size + 1):
            worst = max(worst, float(np.max(np.abs(exact_cdf(r, m).values - brute_force_cdf(p, m).values))))
    secs = time.perf_counter() - start
    ok = mismatches == 0 and worst <= 1e-8 and secs < 300
    verdict("C2 oracle equivalence", ok,
                   f"DP/enumeration mismatches={mismatches}, max |det - brute|={worst:.2e}", secs)


def test_c03_determinant_vs_monte_carlo():
    start = time.perf_counter()
    env = sample_environment(MODEL, 20, Stream.from_seed(3).child("c3"))
    table = exact_cdf(env, 50)
    keys = trial_keys(Stream.from_seed(3).child("c3-noise"), 100_000)
    res = exact_vs_empirical(env, 50, keys, table)
    secs = time.perf_counter() - start
    ok = res["max_standard_errors"] <= 3 and secs < 300
    verdict("C3 determinant vs Monte Carlo", ok,
                   f"max gap {res['max_standard_errors']:.2f} standard errors", secs)


def test_c04_closed_form_constants():
    alpha_c, alpha_cp = critical_values(MODEL)
    quad_cp = 1 / moment(MODEL, Integrand.EDGE_VARIANCE, closed_form=False)
    k = composite_constants(MODEL, 0.25)
    b, alpha = MODEL.b, 0.25
    theta_q = 1 - alpha / quad_cp
    tau2_q = b * (1 - b) * (1 / alpha - 1 / quad_cp)
    beta2_q = (1 - b) * alpha / (b**3 * theta_q)
    errs = {"alpha_c'": abs(alpha_cp - 0.5), "alpha_c' quad": abs(quad_cp - 0.5),
            "theta": max(abs(k.theta - 0.5), abs(theta_q - 0.5)),
            "tau^2": max(abs(k.tau**2 - 0.5), abs(tau2_q - 0.5)),
            "beta^2": max(abs(k.beta**2 - 2), abs(beta2_q - 2))}
    ok = max(errs.values()) <= 1e-10
    verdict("C4 closed-form constants", ok, ", ".join(f"{n} err {e:.1e}" for n, e in errs.items()))


def test_c05_saddle_diagnostics():
    start = time.perf_counter()
    base = Stream.from_seed(5).child("c5")
    rng = np.random.default_rng(5)
    worst1 = worst2 = 0.0
    for e in range(1000):
        n = int(round(10 ** rng.uniform(3, 5)))
        env = sample_environment(MODEL, n, base.child("residual", e))
        q = solve_un(env, 0.25)
        s1, s2 = sigma_derivatives(env, 0.25, q.c, q.u)
        worst1, worst2 = max(worst1, abs(s1)), max(worst2, abs(s2))
    diags = [saddle_diagnostics(MODEL, sample_environment(MODEL, 100_000, base.child("ratio", e)), 0.25)
             for e in range(50)]
    u_med = float(np.median([d["u_ratio"] for d in diags]))
    c_med = float(np.median([d["c_ratio"] for d in diags]))
    secs = time.perf_counter() - start
    res_ok = worst1 <= 1e-9 and worst2 <= 1e-9
    u_ok, c_ok = 0.9 <= u_med <= 1.1, 0.9 <= c_med <= 1.1
    print(f"\n{'PASS' if res_ok else 'FAIL'} C5a saddle residuals: max |sigma'|={worst1:.1e}, max |sigma''|={worst2:.1e}")
    print(f"{'PASS' if u_ok else 'FAIL'} C5b pole distance ratio: median sqrt(n)(u_n+1/r_1)/beta = {u_med:.3f} at n=1e5")
    verdict("C5c centring ratio", c_ok and res_ok and u_ok and secs < 600,
            f"median (c-c_n)/(theta q_1) = {c_med:.3f} at n=1e5", secs)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_c06_quenched_gaussian(seed):
    cfg = ExperimentConfig(study="study-theorem1", alpha=0.25, m=4000, trials=1000, seed=seed)
    r = quenched_gaussian_study(cfg)
    ks, raw = r.summary["ks"], r.summary["ks_without_shift"]
    ok = ks <= 0.10 and raw - ks >= 0.05 and r.wall_seconds < 1800
    verdict(f"C6 quenched Gaussian seed {seed}", ok,
                   f"KS={ks:.3f} (<=0.10), KS without shift={raw:.3f} (increase {raw - ks:.3f} >= 0.05), "
                   f"median statistic={r.summary['median']:.3f}", r.wall_seconds)


def test_c07_annealed_extremal():
    cfg = ExperimentConfig(study="study-theorem2", alpha=0.25, m=4000, trials=2000, seed=7,
                           s_grid=(0.5, 1.0, 2.0))
    r = annealed_extremal_study(cfg)
    errs = {s: abs(frac - ref) for s, _, frac, ref in r.rows}
    ok = max(errs.values()) <= 0.10 and r.wall_seconds < 3600
    detail = ", ".join(f"s={s:g}: {frac:.3f} vs {ref:.3f}" for s, _, frac, ref in r.rows)
    verdict("C7 annealed extremal", ok, detail, r.wall_seconds)


def test_c08_edge_gap():
    cfg = ExperimentConfig(study="study-lemma33", alpha=1.0, m=10_000, trials=10_000, seed=8, s_grid=(1.0,))
    r = edge_gap_study(cfg)
    err = abs(r.summary["fraction_s1"] - (1 - math.exp(-1)))
    ok = err <= 0.02 and r.wall_seconds < 60
    verdict("C8 smallest edge gap", ok,
                   f"fraction={r.summary['fraction_s1']:.4f}, error={err:.4f}", r.wall_seconds)


@pytest.mark.parametrize("preset,t_max,trials,tol,budget", [
    ("reduced", 3000, 300, 0.08, 600),
    ("full", 10_000, 1000, 0.06, 3600),
])
@pytest.mark.parametrize("eta,target", [(1.0, 0.339), (3.0, 0.517)])
def test_c09_exponents(preset, t_max, trials, tol, budget, eta, target):
    cfg = ExperimentConfig(study="study-exponent", eta=eta, width=600, t_max=t_max, trials=trials, seed=9)
    r = exponent_study(cfg)
    slope = r.summary["slope"]
    ok = abs(slope - target) <= tol and r.wall_seconds < budget
    verdict(f"C9 exponent {preset} eta={eta:g}", ok,
                   f"slope={slope:.3f} vs {target} +/- {tol}", r.wall_seconds)


def test_c10_time_constant():
    cfg = ExperimentConfig(study="time-constant", alpha=0.25, m=10_000, trials=200, seed=10)
    r = time_constant_study(cfg)
    err = r.summary["relative_error"]
    ok = err <= 0.01 and r.wall_seconds < 600
    verdict("C10 time constant", ok,
                   f"mean H/m={r.summary['mean_h_over_m']:.4f} vs c={r.summary['c']:.4f}, "
                   f"relative error={err:.4f}", r.wall_seconds)


STUDY_ARGS = {
    "study-theorem1": ["--m", "400", "--trials", "40"],
    "study-theorem2": ["--m", "400", "--trials", "40"],
    "study-pure": ["--alpha", "1.0", "--m", "200", "--trials", "40"],
    "study-lemma33": ["--m", "400", "--trials", "200"],
    "study-exponent": ["--width", "50", "--t-max", "400", "--trials", "12"],
    "study-speed": ["--width", "50", "--t-max", "400", "--trials", "12"],
}


@pytest.mark.parametrize("study", sorted(STUDY_ARGS))
def test_c11_manifest_replay(tmp_path, study):
    first, second = tmp_path / "w1", tmp_path / "w3"
    assert run([study, *STUDY_ARGS[study], "--seed", "11", "--workers", "1", "--out-dir", str(first)]) == 0
    assert run([study, "--config", str(first / f"{study}.manifest"), "--workers", "3",
                "--out-dir", str(second)]) == 0
    same = (first / f"{study}.csv").read_bytes() == (second / f"{study}.csv").read_bytes()
    verdict(f"C11 replay {study}", same, "bit-identical CSV across worker counts" if same else "CSV differs")
