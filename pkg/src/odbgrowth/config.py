"""Flat ``key = value`` run configuration shared by the CLI and the studies."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace

from .disorder import DisorderModel, make_atoms, make_point_mass, make_power_edge
from .errors import ConfigError

FAMILIES = ("power", "point", "atoms")
WORKERS_ENV = "ODBGROWTH_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if value < 1:
            raise ConfigError(f"{WORKERS_ENV} must be positive")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExperimentConfig:
    study: str = "constants"
    family: str = "power"
    eta: float = 3.0
    b: float = 0.5
    p0: float = 0.25
    atoms: str = ""
    alpha: float = 0.25
    m: int = 4000
    n: int = 0
    trials: int = 1000
    quenched: bool = True
    s_grid: tuple = (0.5, 1.0, 2.0)
    seed: int = 1
    workers: int = 1
    width: int = 600
    t_max: int = 10000
    variant: str = "odb"
    topology: str = "ring"
    site: int = 0
    per_octave: int = 1
    rates: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.trials < 2:
            raise ConfigError(f"trials must be at least 2, got {self.trials}")
        if self.m < 1:
            raise ConfigError(f"m must be positive, got {self.m}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be a positive real, got {self.alpha}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.n < 0:
            raise ConfigError("n must be nonnegative (0 means floor(alpha m))")

    @property
    def columns(self) -> int:
        """``n``: explicit when set, otherwise ``floor(alpha m)``."""
        n = self.n or math.floor(self.alpha * self.m)
        if n < 1:
            raise ConfigError(f"floor(alpha m) = {n}; need at least one column")
        return n

    def model(self) -> DisorderModel:
        if self.family == "power":
            return make_power_edge(self.eta, self.b)
        if self.family == "point":
            return make_point_mass(self.p0)
        return make_atoms(parse_atoms(self.atoms))

    def explicit_rates(self) -> list[float] | None:
        if not self.rates.strip():
            return None
        try:
            return [float(x) for x in self.rates.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"rates must be a comma-separated list of numbers, got {self.rates!r}") from None

    def with_updates(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def to_items(self) -> list[tuple[str, str]]:
        return [(f.name, format_value(getattr(self, f.name))) for f in fields(self)]

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_items())


def parse_atoms(text: str) -> list[tuple[float, float]]:
    """``"0.1:0.5, 0.3:0.5"`` -> ``[(0.1, 0.5), (0.3, 0.5)]``."""
    atoms = []
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            value, weight = part.split(":")
            atoms.append((float(value), float(weight)))
        except ValueError:
            raise ConfigError(f"atom {part.strip()!r} is not of the form value:probability") from None
    if not atoms:
        raise ConfigError("atoms family needs at least one value:probability pair")
    return atoms


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(format_value(x) for x in v)
    return str(v)


def _coerce(name: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


_DEFAULTS = {f.name: f.default for f in fields(ExperimentConfig)}


def parse_items(items: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    updates = {}
    for key, raw in items.items():
        name = key.strip().replace("-", "_")
        if name not in _DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        updates[name] = _coerce(name, raw, _DEFAULTS[name])
    return base.with_updates(**updates)


def read_config_text(text: str) -> dict[str, str]:
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno} is not key = value: {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        # manifests prefix config keys with "config." and run metadata with "run."
        if key.startswith("run."):
            continue
        items[key.removeprefix("config.")] = value.strip()
    return items


def load_config(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return read_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
