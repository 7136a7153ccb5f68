"""Pure-state arithmetic shared by every other module.

Amplitudes are stored flat, row-major, with the last party's index varying fastest.
Every value is immutable after construction (arrays are marked read-only) and every
function here is pure.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import null_space

from locsim.errors import (
    DimensionMismatch,
    InvalidBipartition,
    NonFiniteAmplitude,
    NonOrthonormalBasis,
    NotNormalized,
)
from locsim.tolerances import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)


def frozen_array(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.complex128, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    party_dims: tuple[int, ...]
    amps: np.ndarray = field(repr=False)

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)

    @property
    def dim(self) -> int:
        return int(self.amps.size)

    @property
    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.party_dims)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> StateVector:
        norm = self.norm
        if norm == 0.0:
            raise NotNormalized("cannot normalize the zero vector")
        return StateVector(self.party_dims, frozen_array(self.amps / norm))


@dataclass(frozen=True, eq=False)
class LocalOperator:
    matrix: np.ndarray = field(repr=False)
    party: int = 0

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def on(self, party: int) -> LocalOperator:
        return LocalOperator(self.matrix, party)


@dataclass(frozen=True)
class Bipartition:
    left: tuple[int, ...]
    right: tuple[int, ...]

    @classmethod
    def of(cls, left: Iterable[int], n_parties: int, right: Iterable[int] | None = None) -> Bipartition:
        left_set = set(int(p) for p in left)
        right_set = set(range(n_parties)) - left_set if right is None else set(int(p) for p in right)
        everyone = set(range(n_parties))
        if not left_set or not right_set:
            raise InvalidBipartition("both sides of a cut must be nonempty")
        if left_set & right_set:
            raise InvalidBipartition(f"parties {sorted(left_set & right_set)} appear on both sides")
        if left_set | right_set != everyone:
            missing = everyone - (left_set | right_set)
            extra = (left_set | right_set) - everyone
            raise InvalidBipartition(f"cut does not cover the parties (missing {sorted(missing)}, unknown {sorted(extra)})")
        return cls(tuple(sorted(left_set)), tuple(sorted(right_set)))

    @property
    def label(self) -> str:
        return ",".join(map(str, self.left)) + "|" + ",".join(map(str, self.right))


@dataclass(frozen=True, eq=False)
class Matricization:
    matrix: np.ndarray = field(repr=False)
    row_parties: tuple[int, ...]
    col_parties: tuple[int, ...]
    party_dims: tuple[int, ...]

    @property
    def rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def cols(self) -> int:
        return int(self.matrix.shape[1])

    def unmatricize(self) -> StateVector:
        order = self.row_parties + self.col_parties
        shape = [self.party_dims[p] for p in order]
        tensor = self.matrix.reshape(shape).transpose(np.argsort(order))
        return StateVector(self.party_dims, frozen_array(tensor.reshape(-1)))


def _validate_dims(party_dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in party_dims)
    if not dims:
        raise DimensionMismatch("a state needs at least one party")
    if any(d < 1 for d in dims):
        raise DimensionMismatch(f"party dimensions must be positive, got {list(dims)}")
    return dims


def make_state(
    party_dims: Sequence[int],
    amps: Sequence[complex] | np.ndarray,
    norm_tol: float = DEFAULT_TOLERANCES.norm,
    renormalize: bool = False,
) -> StateVector:
    dims = _validate_dims(party_dims)
    vec = np.asarray(amps, dtype=np.complex128).reshape(-1)
    expected = math.prod(dims)
    if vec.size != expected:
        raise DimensionMismatch(f"dims {list(dims)} need {expected} amplitudes, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise NonFiniteAmplitude("amplitudes contain NaN or Inf")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise NotNormalized("the zero vector is not a state")
    if abs(norm**2 - 1.0) > norm_tol:
        if not renormalize:
            raise NotNormalized(f"squared norm {norm**2:.3e} deviates from 1 by more than {norm_tol:g}")
        vec = vec / norm
    return StateVector(dims, frozen_array(vec))


def local_operator(matrix: Sequence[Sequence[complex]] | np.ndarray, party: int = 0) -> LocalOperator:
    mat = np.asarray(matrix, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise NonFiniteAmplitude("operator entries contain NaN or Inf")
    if party < 0:
        raise DimensionMismatch(f"party index must be non-negative, got {party}")
    return LocalOperator(frozen_array(mat), int(party))


def matricize(state: StateVector, bipartition: Bipartition) -> Matricization:
    n = state.n_parties
    if set(bipartition.left) | set(bipartition.right) != set(range(n)):
        raise InvalidBipartition(f"cut {bipartition.label} does not match {n} parties")
    Bipartition.of(bipartition.left, n, bipartition.right)
    order = bipartition.left + bipartition.right
    rows = math.prod(state.party_dims[p] for p in bipartition.left)
    matrix = state.tensor.transpose(order).reshape(rows, -1)
    return Matricization(frozen_array(matrix), bipartition.left, bipartition.right, state.party_dims)


def apply_local(state: StateVector, op: LocalOperator) -> tuple[StateVector, float]:
    """Apply `op` to its party without renormalizing; returns (result, norm of result)."""
    if not 0 <= op.party < state.n_parties:
        raise DimensionMismatch(f"party {op.party} does not exist in a {state.n_parties}-party state")
    if op.dim != state.party_dims[op.party]:
        raise DimensionMismatch(
            f"operator of dimension {op.dim} cannot act on party {op.party} of dimension {state.party_dims[op.party]}"
        )
    moved = np.tensordot(op.matrix, state.tensor, axes=([1], [op.party]))
    result = np.moveaxis(moved, 0, op.party).reshape(-1)
    out = StateVector(state.party_dims, frozen_array(result))
    return out, out.norm


def overlap(s1: StateVector, s2: StateVector) -> complex:
    if s1.party_dims != s2.party_dims:
        raise DimensionMismatch(f"states over {list(s1.party_dims)} and {list(s2.party_dims)} cannot be compared")
    return complex(np.vdot(s1.amps, s2.amps))


def phase_invariant_distance(s1: StateVector, s2: StateVector) -> float:
    """1 - |<s1|s2>| on the normalized states; zero iff equal up to a global phase."""
    value = overlap(s1, s2)
    scale = s1.norm * s2.norm
    if scale == 0.0:
        raise NotNormalized("cannot compare against the zero vector")
    return float(min(1.0, max(0.0, 1.0 - abs(value) / scale)))


def reduced_density(state: StateVector, parties_kept: Iterable[int]) -> np.ndarray:
    kept = sorted(set(int(p) for p in parties_kept))
    if not kept or len(kept) >= state.n_parties:
        raise InvalidBipartition(f"kept parties {kept} must be a nonempty proper subset")
    m = matricize(state, Bipartition.of(kept, state.n_parties)).matrix
    rho = m @ m.conj().T
    return 0.5 * (rho + rho.conj().T)


def permute_parties(state: StateVector, order: Sequence[int]) -> StateVector:
    """New state whose party k is the old party order[k]."""
    order = [int(p) for p in order]
    if sorted(order) != list(range(state.n_parties)):
        raise InvalidBipartition(f"{order} is not a permutation of {state.n_parties} parties")
    dims = tuple(state.party_dims[p] for p in order)
    return StateVector(dims, frozen_array(state.tensor.transpose(order).reshape(-1)))


def swap_parties(state: StateVector, i: int, j: int) -> StateVector:
    for p in (i, j):
        if not 0 <= p < state.n_parties:
            raise DimensionMismatch(f"party {p} does not exist in a {state.n_parties}-party state")
    if state.party_dims[i] != state.party_dims[j]:
        raise DimensionMismatch(f"parties {i} and {j} have dimensions {state.party_dims[i]} and {state.party_dims[j]}")
    order = list(range(state.n_parties))
    order[i], order[j] = order[j], order[i]
    return permute_parties(state, order)


def product_state(vectors: Sequence[np.ndarray]) -> StateVector:
    vec = np.ones(1, dtype=np.complex128)
    for v in vectors:
        vec = np.kron(vec, np.asarray(v, dtype=np.complex128))
    return make_state([len(v) for v in vectors], vec, renormalize=True)


def unitarity_residual(matrix: np.ndarray) -> float:
    matrix = np.asarray(matrix)
    return float(np.linalg.norm(matrix.conj().T @ matrix - np.eye(matrix.shape[1]), 2))


def completeness_residual(matrices: Sequence[np.ndarray]) -> float:
    total = sum(m.conj().T @ m for m in matrices)
    return float(np.linalg.norm(total - np.eye(total.shape[0]), 2))


def orthonormality_residual(columns: np.ndarray) -> float:
    columns = np.asarray(columns)
    if columns.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(columns.conj().T @ columns - np.eye(columns.shape[1]), 2))


def complete_basis(columns: np.ndarray, tol: float = DEFAULT_TOLERANCES.arithmetic) -> np.ndarray:
    """Extend orthonormal columns to a unitary whose leading columns are `columns`."""
    columns = np.asarray(columns, dtype=np.complex128)
    dim, k = columns.shape
    residual = orthonormality_residual(columns)
    if residual > tol:
        raise NonOrthonormalBasis(f"basis columns deviate from orthonormal by {residual:.3e}")
    if k == dim:
        return columns.copy()
    if k == 0:
        return np.eye(dim, dtype=np.complex128)
    complement = null_space(columns.conj().T)
    if complement.shape[1] != dim - k:
        logger.warning("null space of %d columns in C^%d has size %d", k, dim, complement.shape[1])
        complement = complement[:, : dim - k]
    return np.hstack([columns, complement])
