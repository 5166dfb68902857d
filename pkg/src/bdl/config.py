"""Experiment configuration: a minimal TOML-style key/value format.

One ``[experiment]`` table of ``key = value`` lines; values are quoted
strings, bare numbers, or booleans.  No schema engine: the point of the
format is to stay diff-friendly and hand-editable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

EXPERIMENTS = (
    "legendre-check",
    "scriptf",
    "zeros",
    "kernel-decay",
    "divsolve-check",
    "limit-convergence",
    "resonance-trend",
)


class ConfigError(ValueError):
    """Malformed configuration, with line/field diagnostics."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    potential: str = "quadratic:1"
    lambda_min: float = 50.0
    lambda_max: float = 800.0
    lambda_count: int = 6
    lambda_scale: str = "geom"          # geom | linear
    box: Optional[tuple[float, float, float, float]] = None  # re0,re1,im0,im1
    xi_min: float = -1.0
    xi_max: float = 1.0
    xi_count: int = 21
    xi_values: tuple[float, ...] = (0.0, 0.3, -0.3)  # divsolve contexts
    delta: float = 1.0                  # kernel separation Im(z - w)
    x_offset: float = 0.0               # kernel real base point
    a: float = 3.0                      # gamma exponent
    grid: int = 9                       # region grid per axis
    seeds: int = 20
    seed: int = 0
    rel_tol: float = 1e-10
    out: str = "."
    jobs: int = 1
    svg: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; know {EXPERIMENTS}"
            )
        if not (self.lambda_min > 0 and self.lambda_max >= self.lambda_min):
            raise ConfigError("lambda grid must be positive and increasing")
        if self.lambda_count < 1:
            raise ConfigError("lambda_count must be >= 1")
        if self.lambda_scale not in ("geom", "linear"):
            raise ConfigError("lambda_scale must be 'geom' or 'linear'")
        if self.rel_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def lambda_grid(self) -> list[float]:
        n = self.lambda_count
        if n == 1:
            return [self.lambda_min]
        if self.lambda_scale == "geom":
            ratio = (self.lambda_max / self.lambda_min) ** (1.0 / (n - 1))
            return [self.lambda_min * ratio**k for k in range(n)]
        step = (self.lambda_max - self.lambda_min) / (n - 1)
        return [self.lambda_min + step * k for k in range(n)]


def _parse_scalar(raw: str, lineno: int):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    try:
        if any(c in raw for c in ".eE") and not raw.lstrip("+-").isdigit():
            return float(raw)
        return int(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {raw!r}") from None


def parse_config_text(text: str) -> dict:
    table = {}
    in_experiment = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if stripped != "[experiment]":
                raise ConfigError(
                    f"line {lineno}: only an [experiment] table is supported, "
                    f"got {stripped!r}"
                )
            in_experiment = True
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if not in_experiment:
            raise ConfigError(f"line {lineno}: key outside the [experiment] table")
        key, _, raw = stripped.partition("=")
        table[key.strip()] = _parse_scalar(raw, lineno)
    if not in_experiment:
        raise ConfigError("missing [experiment] table")
    return table


def parse_lambda_spec(spec: str) -> tuple[float, float, int]:
    """Parse the CLI grid override 'min:max:count'."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"lambda spec must be min:max:count, got {spec!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"bad lambda spec {spec!r}") from None


def parse_box_spec(spec: str) -> tuple[float, float, float, float]:
    parts = [t for t in spec.split(",") if t.strip()]
    if len(parts) != 4:
        raise ConfigError(f"box must be re0,re1,im0,im1, got {spec!r}")
    try:
        a, b, c, d = (float(t) for t in parts)
    except ValueError:
        raise ConfigError(f"bad box spec {spec!r}") from None
    if not (b > a and d > c):
        raise ConfigError("box must be nondegenerate")
    return a, b, c, d


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def config_from_table(table: dict, experiment: Optional[str] = None) -> ExperimentConfig:
    table = dict(table)
    if experiment is not None:
        table.setdefault("experiment", experiment)
        if table["experiment"] != experiment:
            raise ConfigError(
                f"config names experiment {table['experiment']!r} but "
                f"{experiment!r} was requested"
            )
    if "experiment" not in table:
        raise ConfigError("missing 'experiment' key")
    if "lambda" in table:
        lo, hi, n = parse_lambda_spec(str(table.pop("lambda")))
        table["lambda_min"], table["lambda_max"], table["lambda_count"] = lo, hi, n
    if "box" in table and isinstance(table["box"], str):
        table["box"] = parse_box_spec(table["box"])
    if "xi_values" in table and isinstance(table["xi_values"], str):
        table["xi_values"] = tuple(
            float(t) for t in table["xi_values"].split(",") if t.strip()
        )
    unknown = set(table) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("lambda_min", "lambda_max", "a", "delta", "x_offset", "rel_tol",
                "xi_min", "xi_max"):
        if key in table:
            table[key] = float(table[key])
    return ExperimentConfig(**table)


def load_config(path, experiment: Optional[str] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_table(parse_config_text(text), experiment)
