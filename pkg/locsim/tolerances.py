from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

import yaml

from locsim.errors import ConfigError

DEFAULT_TOLERANCES_PATH = Path(__file__).resolve().parent.parent / "data" / "tolerances.yaml"


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-12
    arithmetic: float = 1e-10
    rank: float = 1e-10
    group: float = 1e-8
    decision: float = 1e-8
    verify: float = 1e-9
    zero_probability: float = 1e-14
    support: float = 1e-10
    completeness: float = 1e-9
    unitarity: float = 1e-10

    def with_decision(self, value: float | None) -> Tolerances:
        if value is None:
            return self
        if not value > 0:
            raise ConfigError(f"tolerance must be positive, got {value}")
        return replace(self, decision=float(value))

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


DEFAULT_TOLERANCES = Tolerances()


def load_tolerance_table(path: Path) -> dict[str, Any]:
    with path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of tolerance names to numbers")
    return data


def load_tolerances(path: Path | None = None) -> Tolerances:
    if path is None:
        if not DEFAULT_TOLERANCES_PATH.exists():
            return DEFAULT_TOLERANCES
        path = DEFAULT_TOLERANCES_PATH
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"tolerance table {path} does not exist")
    table = load_tolerance_table(path)
    known = {f.name for f in fields(Tolerances)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown tolerance keys {', '.join(unknown)}")
    values: dict[str, float] = {}
    for key, value in table.items():
        try:
            values[key] = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: tolerance {key!r} is not a number: {value!r}")
        if not values[key] > 0:
            raise ConfigError(f"{path}: tolerance {key!r} must be positive")
    return Tolerances(**values)
