"""Run configuration: ``key = value`` files overridden by command-line flags.

Example::

    input = data/ddos.csv
    features = PKT_RATE, BYTE_RATE, UTILIZATION
    five.p = 2
    five.threshold = 0.5
    learner.max_rules = 28
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError
from .five import FiveParams
from .learner import LearnerConfig
from .pipeline import DEFAULT_FEATURES


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _opt_int(text: str) -> Optional[int]:
    return None if text.strip().lower() in ("", "none", "all") else int(text)


def _features(text: str) -> tuple:
    return tuple(f.strip() for f in text.replace(";", ",").split(",") if f.strip())


TOP_KEYS = {
    "input": str, "rules": str, "out": str, "trace": str,
    "features": _features, "bins": int, "seed": int, "n_per_class": _opt_int,
    "fraction": float, "strict_universe": _bool, "binary": _bool, "top": _opt_int,
}
FIVE_KEYS = {"p": float, "w": float, "scaling_floor": _opt_float, "threshold": float}
LEARNER_KEYS = {
    "max_rules": int, "max_iterations": int, "target": float, "initial_step": float,
    "decay": float, "stall_window": int, "min_step": float,
}


@dataclass(frozen=True)
class RunConfig:
    input: Optional[str] = None
    rules: Optional[str] = None
    out: Optional[str] = None
    trace: Optional[str] = None
    features: tuple = DEFAULT_FEATURES
    bins: int = 10
    seed: int = 0
    n_per_class: Optional[int] = None
    fraction: float = 1.0
    strict_universe: bool = False
    binary: bool = True
    top: Optional[int] = None
    five: FiveParams = field(default_factory=FiveParams)
    learner: LearnerConfig = field(default_factory=LearnerConfig)

    def __post_init__(self):
        if int(self.bins) != self.bins or self.bins < 2:
            raise ConfigError(f"bins must be an integer >= 2, got {self.bins}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.n_per_class is not None and self.n_per_class < 1:
            raise ConfigError(f"n_per_class must be positive, got {self.n_per_class}")
        if not 0 < self.fraction <= 1:
            raise ConfigError(f"fraction must lie in (0, 1], got {self.fraction}")
        if self.top is not None and self.top < 1:
            raise ConfigError(f"top must be positive, got {self.top}")
        if not self.features:
            raise ConfigError("at least one feature must be selected")
        if not (math.isfinite(self.five.threshold) and 0.0 <= self.five.threshold <= 1.0):
            raise ConfigError(f"five.threshold must lie in [0, 1], got {self.five.threshold}")


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a flat dict of typed values."""
    values: dict = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        section, _, name = key.rpartition(".")
        table = {"": TOP_KEYS, "five": FIVE_KEYS, "learner": LEARNER_KEYS}.get(section)
        if table is None or name not in table:
            raise ConfigError(f"config line {line_no}: unknown key {key!r}")
        try:
            values[key] = table[name](value)
        except ValueError as exc:
            raise ConfigError(f"config line {line_no}: bad value for {key}: {exc}") from None
    return values


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    return parse_config_text(text)


def build_config(*layers: Mapping[str, Any]) -> RunConfig:
    """Merge flat dicts (later layers win, ``None`` means unset) into a RunConfig."""
    merged: dict = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    five_kw = {("floor" if k == "scaling_floor" else k): merged.pop(f"five.{k}")
               for k in FIVE_KEYS if f"five.{k}" in merged}
    learner_kw = {k: merged.pop(f"learner.{k}") for k in LEARNER_KEYS if f"learner.{k}" in merged}
    if "seed" in merged:
        learner_kw.setdefault("seed", merged["seed"])
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return RunConfig(five=FiveParams(**five_kw), learner=LearnerConfig(**learner_kw), **merged)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
