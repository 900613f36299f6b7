"""Experiment and routing-scenario files (TOML key = value)."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .evaluation import Experiment, ExperimentError

EXPERIMENT_KEYS = {
    "topology",
    "schemes",
    "alpha",
    "seeds",
    "pair_sampling",
    "sampling",
    "variant",
    "intersection",
    "strict",
    "exact",
    "budgets",
}
SCENARIO_KEYS = {"topology", "alpha", "seeds", "flows", "budgets", "sampling", "mtu", "id_bytes"}


class ConfigError(ValueError):
    pass


def read_config(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _check_keys(cfg: dict[str, Any], allowed: set[str], required: set[str]) -> None:
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    missing = required - set(cfg)
    if missing:
        raise ConfigError(f"missing keys: {', '.join(sorted(missing))}")


def _seeds(value: Any) -> tuple[int, ...]:
    """A list of seeds, or a count ``s`` meaning ``0..s-1``."""
    if isinstance(value, int):
        return tuple(range(value))
    if isinstance(value, (list, tuple)) and all(isinstance(s, int) for s in value):
        return tuple(value)
    raise ConfigError("seeds must be an integer count or a list of integers")


def experiment_from_config(cfg: dict[str, Any], **overrides: Any) -> tuple[Experiment, list[int]]:
    """Build the experiment (command-line ``overrides`` win when not None) and its probe budgets."""
    _check_keys(cfg, EXPERIMENT_KEYS, {"topology", "schemes", "alpha"})
    values = {k: v for k, v in cfg.items() if k != "budgets"}
    values.update({k: v for k, v in overrides.items() if v is not None})
    values["schemes"] = tuple(values["schemes"])
    values["seeds"] = _seeds(values.get("seeds", 1))
    values["alpha"] = float(values["alpha"])
    try:
        e = Experiment(**values)
    except (ExperimentError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    budgets = cfg.get("budgets", [])
    if not isinstance(budgets, list) or not all(isinstance(b, int) and b >= 0 for b in budgets):
        raise ConfigError("budgets must be a list of non-negative integers")
    return e, budgets


@dataclass(frozen=True)
class Scenario:
    topology: str
    alpha: float | None = None
    seeds: tuple[int, ...] = (0,)
    flows: int = 100
    budgets: tuple[int, ...] = ()
    sampling: str = "degree"
    mtu: int = 1500
    id_bytes: int = 4


def scenario_from_config(cfg: dict[str, Any], **overrides: Any) -> Scenario:
    _check_keys(cfg, SCENARIO_KEYS, {"topology"})
    values = dict(cfg)
    values.update({k: v for k, v in overrides.items() if v is not None})
    values["seeds"] = _seeds(values.get("seeds", 1))
    values["budgets"] = tuple(values.get("budgets", ()))
    if values.get("alpha") is not None:
        values["alpha"] = float(values["alpha"])
    if not isinstance(values.get("flows", 1), int) or values.get("flows", 1) < 0:
        raise ConfigError("flows must be a non-negative integer")
    if values.get("sampling", "degree") not in ("uniform", "degree", "paper-eval"):
        raise ConfigError(f"unknown sampling {values['sampling']!r}")
    return Scenario(**values)
