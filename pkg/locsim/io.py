"""State, operator and measurement files.

Complex numbers are two-element [re, im] arrays; amplitudes follow the tensor
convention (last party fastest). Files ending in .yaml/.yml are read as YAML, anything
else as JSON.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError

from locsim.errors import SchemaError
from locsim.protocol_sim import MeasurementSet, measurement_set
from locsim.tensor import StateVector, make_state
from locsim.tolerances import DEFAULT_TOLERANCES

ComplexPair = tuple[float, float]
MatrixRows = list[list[ComplexPair]]


class StateFile(BaseModel):
    dims: list[int]
    amps: list[ComplexPair]
    labels: list[str] | None = None


class OperatorFile(BaseModel):
    dim: int
    matrix: MatrixRows


class MeasurementFile(BaseModel):
    dim: int
    operators: list[MatrixRows]


def digest(path: Path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror or exc}")


def to_pairs(values: np.ndarray) -> list:
    """Complex array -> nested lists ending in [re, im]."""
    values = np.asarray(values, dtype=np.complex128)
    return np.stack([values.real, values.imag], axis=-1).tolist()


def from_pairs(pairs: Sequence) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def _read(path: Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror or exc}")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise SchemaError(f"{path}: not valid structured text ({exc})")


def _validate(model: type[BaseModel], data: Any, path: Path) -> Any:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise SchemaError(f"{path}: {exc.error_count()} schema error(s): {exc.errors()[0]['msg']}")


def _write(path: Path, data: dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        if path.suffix.lower() in (".yaml", ".yml"):
            yaml.safe_dump(data, f, sort_keys=False)
        else:
            json.dump(data, f, indent=2)
            f.write("\n")


def _matrix(rows: MatrixRows, dim: int, path: Path) -> np.ndarray:
    try:
        matrix = from_pairs(rows) if rows else np.zeros((0, 0), dtype=np.complex128)
    except (ValueError, IndexError):
        raise SchemaError(f"{path}: matrix rows have unequal lengths")
    if matrix.shape != (dim, dim):
        raise SchemaError(f"{path}: expected a {dim} x {dim} matrix, got shape {matrix.shape[:2]}")
    return matrix


def load_state(path: Path, norm_tol: float = DEFAULT_TOLERANCES.norm) -> StateVector:
    model = _validate(StateFile, _read(path), path)
    amps = from_pairs(model.amps) if model.amps else np.zeros(0, dtype=np.complex128)
    return make_state(model.dims, amps, norm_tol)


def save_state(state: StateVector, path: Path, labels: Sequence[str] | None = None) -> None:
    data: dict[str, Any] = {"dims": list(state.party_dims), "amps": to_pairs(state.amps)}
    if labels:
        data["labels"] = list(labels)
    _write(path, data)


def load_operator(path: Path) -> np.ndarray:
    model = _validate(OperatorFile, _read(path), path)
    return _matrix(model.matrix, model.dim, path)


def save_operator(matrix: np.ndarray, path: Path) -> None:
    matrix = np.asarray(matrix)
    _write(path, {"dim": int(matrix.shape[0]), "matrix": to_pairs(matrix)})


def load_measurement(path: Path, party: int = 0) -> MeasurementSet:
    model = _validate(MeasurementFile, _read(path), path)
    if not model.operators:
        raise SchemaError(f"{path}: a measurement needs at least one operator")
    return measurement_set([_matrix(rows, model.dim, path) for rows in model.operators], party)


def save_measurement(ops: MeasurementSet, path: Path) -> None:
    _write(path, {"dim": ops.dim, "operators": [to_pairs(op.matrix) for op in ops.operators]})
