from __future__ import annotations

import json
import math
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError, ValidationInfo, field_validator

from locsim.errors import NumericalError, SchemaError

SCHEMA_VERSION = 1


def plain(value: Any) -> Any:
    """numpy scalars and arrays, tuples and complex numbers -> JSON-ready builtins."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _finite(value: Any, where: str) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _finite(v, f"{where}.{k}")
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _finite(v, f"{where}[{i}]")
    elif isinstance(value, float) and not math.isfinite(value):
        raise NumericalError(f"report field {where} is not finite: {value}")


class Report(BaseModel):
    schema_version: int = SCHEMA_VERSION
    command: list[str]
    input_digests: dict[str, str] = {}
    verdict: str
    residuals: dict[str, float] = {}
    tolerances: dict[str, float] = {}
    wall_time: float = 0.0
    payload: dict[str, Any] = {}

    @field_validator("residuals", "tolerances", "payload", mode="before")
    @classmethod
    def _plain_and_finite(cls, value: Any, info: ValidationInfo) -> Any:
        value = plain(value)
        _finite(value, info.field_name)
        return value


def emit(report: Report, fmt: str = "json") -> str:
    data = report.model_dump(mode="json")
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt == "text":
        return yaml.safe_dump(data, sort_keys=False)
    raise SchemaError(f"unknown report format {fmt!r}")


def parse_report(text: str, fmt: str = "json") -> Report:
    try:
        data = json.loads(text) if fmt == "json" else yaml.safe_load(text)
        return Report.model_validate(data)
    except (json.JSONDecodeError, yaml.YAMLError, ValidationError) as exc:
        raise SchemaError(f"not a locsim report: {exc}")
