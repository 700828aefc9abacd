"""Command line entry point: ``odbgrowth <subcommand> [options]``.

Every run writes ``<subcommand>.csv`` and ``<subcommand>.manifest`` into
``--out-dir``.  The manifest lists the fully resolved configuration as
``config.<key> = value`` lines, so ``--config <manifest>`` replays the run.
Exit status: 0 success, 2 configuration error, 3 regime or precondition
failure, 4 numerical alarm.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from .config import (ExperimentConfig, default_workers, format_value, load_config, parse_items)
from .disorder import Environment, sample_environment
from .errors import ConfigError, OdbError
from .experiments import STUDIES
from .fredholm import exact_cdf
from .growth import NEG_INF, RING, STALK, geometric_checkpoints, run_flat_ring, run_stalk
from .limits import COMPOSITE, limit_constants, regime_classify
from .quenched import saddle_diagnostics, solve_un
from .rng import Stream, trial_keys

SUBCOMMANDS = ("constants", "quenched", "exact-cdf", "simulate", *STUDIES)

# flag name -> config key; values arrive as strings and go through config parsing
_FLAGS = {
    "family": "power | point | atoms",
    "eta": "power-edge exponent",
    "b": "support edge b",
    "p0": "point-mass location",
    "atoms": "value:prob,value:prob,... for the atoms family",
    "alpha": "aspect ratio n/m",
    "m": "rows",
    "n": "columns (0 means floor(alpha m))",
    "trials": "trials or environments",
    "s-grid": "comma-separated s values",
    "width": "ring width",
    "t-max": "last simulated time",
    "variant": "odb | db",
    "topology": "ring | stalk",
    "site": "observed site",
    "per-octave": "checkpoints per factor of two in t",
    "rates": "explicit comma-separated column probabilities",
    "quenched": "true | false",
}


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="odbgrowth", description="ODB growth with quenched column rates")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    sub.required = True
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file (a manifest also works)")
        p.add_argument("--seed", help="master seed")
        p.add_argument("--workers", help="worker processes")
        p.add_argument("--out-dir", default=".", help="directory for CSV and manifest")
        for flag, text in _FLAGS.items():
            p.add_argument(f"--{flag}", help=text)
    return parser


def resolve_config(args) -> ExperimentConfig:
    items = load_config(args.config) if args.config else {}
    if "workers" not in items:
        items["workers"] = str(default_workers())
    for key in ("seed", "workers", *_FLAGS):
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            items[key] = value
    items["study"] = args.subcommand
    return parse_items(items)


class Manifest:
    """``run.*`` metadata plus ``config.*`` lines; rewritten at start and at finish."""

    def __init__(self, path: str, subcommand: str, cfg: ExperimentConfig):
        self.path = path
        self.subcommand = subcommand
        self.cfg = cfg
        self.outputs: list[str] = []
        self.started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.t0 = time.perf_counter()

    def write(self, status: str, summary: dict | None = None):
        lines = [
            f"run.subcommand = {self.subcommand}",
            f"run.version = {_version()}",
            f"run.status = {status}",
            f"run.started = {self.started}",
            f"run.outputs = {','.join(self.outputs)}",
        ]
        if status != "running":
            lines.append(f"run.wall_seconds = {time.perf_counter() - self.t0:.3f}")
        for k, v in (summary or {}).items():
            lines.append(f"run.summary.{k} = {format_value(v)}")
        lines += [f"config.{k} = {v}" for k, v in self.cfg.to_items()]
        with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def write_csv(path: str, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)) and v == NEG_INF:
        return "-inf"
    return v


def _environment(cfg: ExperimentConfig, label: str) -> Environment:
    model = cfg.model()
    explicit = cfg.explicit_rates()
    if explicit is not None:
        return Environment(np.array(explicit), model.b if cfg.family != "point" else max(explicit))
    return sample_environment(model, cfg.columns, Stream.from_seed(cfg.seed).child(label, "environment"))


def cmd_constants(cfg):
    model = cfg.model()
    const = limit_constants(model, cfg.alpha).as_dict()
    const["tau_squared"] = const["tau"] ** 2
    const["beta_squared"] = const["beta"] ** 2
    rows = [(k, v) for k, v in const.items()]
    return ("key", "value"), rows, const


def cmd_quenched(cfg):
    model = cfg.model()
    composite = regime_classify(model, cfg.alpha) == COMPOSITE
    base = Stream.from_seed(cfg.seed).child("quenched")
    rows = []
    cols = ("environment", "n", "u_n", "c_n", "equation_residual", "sigma1", "sigma2",
            "u_ratio", "c_ratio", "q1", "r1")
    for e in range(cfg.trials):
        env = sample_environment(model, cfg.columns, base.child("environment", e))
        if composite:
            d = saddle_diagnostics(model, env, cfg.alpha)
            rows.append((e, env.n, d["u"], d["c_n"], d["equation_residual"], d["sigma1"], d["sigma2"],
                         d["u_ratio"], d["c_ratio"], d["q1"], d["r1"]))
        else:
            qc = solve_un(env, cfg.alpha)
            dig = env.digest()
            rows.append((e, env.n, qc.u, qc.c, qc.equation_residual, qc.sigma1, qc.sigma2,
                         math.nan, math.nan, dig["q1"], dig["r1"]))
    arr = np.array([r[2:] for r in rows], dtype=float)
    summary = {"environments": cfg.trials, "n": cfg.columns,
               "max_sigma1": float(arr[:, 3].max()), "max_sigma2": float(arr[:, 4].max())}
    if composite:
        summary["median_u_ratio"] = float(np.median(arr[:, 5]))
        summary["median_c_ratio"] = float(np.median(arr[:, 6]))
    return cols, rows, summary


def cmd_exact_cdf(cfg):
    env = _environment(cfg, "exact-cdf")
    table = exact_cdf(env, cfg.m)
    rows = [(h, v, prov, flag, float(rad)) for (h, v, prov, flag), rad in zip(table.rows(), table.radius)]
    summary = {"m": cfg.m, "n": env.n, **table.diagnostics, **env.digest()}
    return ("h", "cdf", "provenance", "condition", "radius"), rows, summary


def cmd_simulate(cfg):
    times = geometric_checkpoints(cfg.t_max, cfg.per_octave)
    base = Stream.from_seed(cfg.seed).child("simulate")
    keys = trial_keys(base.child("noise"), cfg.trials)
    rows = []
    if cfg.topology == STALK:
        if cfg.variant != "odb":
            raise ConfigError("the stalk simulator runs the one-sided (odb) variant only")
        env = _environment(cfg.with_updates(n=cfg.width), "simulate")
        cps = np.array([(t, cfg.site) for t in times])
        for i, key in enumerate(keys):
            vals = run_stalk(env.p, cfg.t_max, int(key), cps)
            rows += [(i, int(t), cfg.site, int(v)) for t, v in zip(times, vals)]
    elif cfg.topology == RING:
        explicit = cfg.explicit_rates()
        p = np.array(explicit) if explicit is not None else None
        if p is None:
            from .disorder import sample_rates
            p = sample_rates(cfg.model(), cfg.width, base.child("environment"))
        heights = run_flat_ring(p, keys, times, (cfg.site,), cfg.variant)
        for i in range(cfg.trials):
            rows += [(i, int(t), cfg.site, int(v)) for t, v in zip(times, heights[i, 0])]
    else:
        raise ConfigError(f"topology must be ring or stalk, got {cfg.topology!r}")
    return ("trial", "t", "x", "h"), rows, {"trials": cfg.trials, "t_max": cfg.t_max}


def cmd_study(cfg, name):
    report = STUDIES[name](cfg)
    summary = dict(report.summary)
    summary.update({f"digest_{k}": v for k, v in report.digest.items()})
    summary["study_seconds"] = round(report.wall_seconds, 3)
    return report.columns, report.rows, summary


def execute(cfg: ExperimentConfig, subcommand: str, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    manifest = Manifest(os.path.join(out_dir, f"{subcommand}.manifest"), subcommand, cfg)
    manifest.write("running")
    try:
        if subcommand == "constants":
            cols, rows, summary = cmd_constants(cfg)
        elif subcommand == "quenched":
            cols, rows, summary = cmd_quenched(cfg)
        elif subcommand == "exact-cdf":
            cols, rows, summary = cmd_exact_cdf(cfg)
        elif subcommand == "simulate":
            cols, rows, summary = cmd_simulate(cfg)
        else:
            cols, rows, summary = cmd_study(cfg, subcommand)
    except OdbError as exc:
        manifest.write(f"failed ({type(exc).__name__})")
        raise
    csv_name = f"{subcommand}.csv"
    write_csv(os.path.join(out_dir, csv_name), cols, rows)
    manifest.outputs.append(csv_name)
    manifest.write("ok", summary)
    return summary


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        summary = execute(cfg, args.subcommand, args.out_dir)
    except OdbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(" ".join(f"{k}={format_value(v)}" for k, v in summary.items()))
    return 0


def main() -> None:
    sys.exit(run())
