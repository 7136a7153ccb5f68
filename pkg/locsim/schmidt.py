"""Schmidt decompositions across cuts, degeneracy blocks, and the multipartite
decomposability test."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import polar

from locsim.errors import DimensionMismatch, UnsortedInput
from locsim.tensor import (
    Bipartition,
    Matricization,
    StateVector,
    complete_basis,
    frozen_array,
    matricize,
    orthonormality_residual,
)
from locsim.tolerances import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

# Fixed stream for the contraction vector that splits degenerate blocks.
_SPLITTER_SEED = 0x5EED_B10C


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coeffs: np.ndarray
    left_basis: np.ndarray = field(repr=False)
    right_basis: np.ndarray = field(repr=False)
    bipartition: Bipartition
    party_dims: tuple[int, ...]

    @property
    def rank(self) -> int:
        return int(self.coeffs.size)

    @property
    def spectrum(self) -> np.ndarray:
        return self.coeffs**2


@dataclass(frozen=True)
class DegeneracyBlocks:
    block_sizes: tuple[int, ...]
    block_values: tuple[float, ...]

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    def labels(self) -> np.ndarray:
        """Block index of every position of the spectrum."""
        return np.repeat(np.arange(len(self.block_sizes)), self.block_sizes)

    def slices(self) -> list[slice]:
        out, start = [], 0
        for size in self.block_sizes:
            out.append(slice(start, start + size))
            start += size
        return out


@dataclass(frozen=True, eq=False)
class MultiSchmidtDecomposition:
    coeffs: np.ndarray
    per_party_bases: tuple[np.ndarray, ...] = field(repr=False)
    party_dims: tuple[int, ...]

    feasible = True

    @property
    def rank(self) -> int:
        return int(self.coeffs.size)

    def frame(self, party: int) -> np.ndarray:
        """Unitary whose leading columns are this party's Schmidt vectors."""
        return complete_basis(self.per_party_bases[party])

    def reconstruct(self) -> StateVector:
        total = np.zeros(int(np.prod(self.party_dims)), dtype=np.complex128)
        for ell, c in enumerate(self.coeffs):
            term = np.ones(1, dtype=np.complex128)
            for basis in self.per_party_bases:
                term = np.kron(term, basis[:, ell])
            total += c * term
        return StateVector(self.party_dims, frozen_array(total))


@dataclass(frozen=True)
class SchmidtInfeasible:
    """Why a state is not Schmidt decomposable.

    reason "entangled_cofactor": `index` is the first Schmidt vector of party 0 whose
    cofactor is not a product, `witness` that cofactor's second singular value.
    reason "non_orthogonal_factors": `index` is the party whose factors are not
    orthonormal, `witness` the Gram-matrix deviation.
    """

    index: int
    witness: float
    reason: str = "entangled_cofactor"

    feasible = False


def _canonical_phase(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    left = left.copy()
    right = right.copy()
    for ell in range(left.shape[1]):
        idx = int(np.argmax(np.abs(left[:, ell])))
        pivot = left[idx, ell]
        if abs(pivot) == 0.0:
            continue
        phase = pivot / abs(pivot)
        left[:, ell] /= phase
        right[:, ell] *= phase
    return left, right


def schmidt_decompose(
    state: StateVector,
    bipartition: Bipartition,
    rank_tol: float = DEFAULT_TOLERANCES.rank,
) -> SchmidtDecomposition:
    m = matricize(state, bipartition)
    u, s, vh = np.linalg.svd(m.matrix, full_matrices=False)
    keep = s > rank_tol
    left, right = _canonical_phase(u[:, keep], vh[keep, :].T)
    return SchmidtDecomposition(
        coeffs=s[keep].copy(),
        left_basis=left,
        right_basis=right,
        bipartition=bipartition,
        party_dims=state.party_dims,
    )


def degeneracy_blocks(
    coeffs: Sequence[float] | np.ndarray,
    ambient_dim: int,
    group_tol: float = DEFAULT_TOLERANCES.group,
) -> DegeneracyBlocks:
    values = [float(c) for c in coeffs]
    if ambient_dim < len(values):
        raise DimensionMismatch(f"{len(values)} coefficients do not fit an operator space of dimension {ambient_dim}")
    for a, b in zip(values, values[1:]):
        if b > a * (1.0 + group_tol):
            raise UnsortedInput(f"coefficients must be descending, got {a} before {b}")

    sizes: list[int] = []
    reps: list[float] = []
    for c in values:
        if reps and abs(reps[-1] - c) <= group_tol * reps[-1]:
            sizes[-1] += 1
        else:
            sizes.append(1)
            reps.append(c)
    if ambient_dim > len(values):
        sizes.append(ambient_dim - len(values))
        reps.append(0.0)
    return DegeneracyBlocks(tuple(sizes), tuple(reps))


def reconstruct(sd: SchmidtDecomposition) -> StateVector:
    matrix = (sd.left_basis * sd.coeffs) @ sd.right_basis.T
    return Matricization(matrix, sd.bipartition.left, sd.bipartition.right, sd.party_dims).unmatricize()


def _split_degenerate(tensor: np.ndarray, left: np.ndarray, blocks: DegeneracyBlocks) -> np.ndarray:
    """Rotate each degenerate block of party-0 vectors onto the product-compatible basis.

    Contracting party 1 with a generic vector v turns sum_l c a_l b_l c_l into
    sum_l c (v.b_l) a_l c_l, whose singular values separate within the block.
    """
    rng = np.random.default_rng(_SPLITTER_SEED)
    d1 = tensor.shape[1]
    v = rng.standard_normal(d1) + 1j * rng.standard_normal(d1)
    contracted = np.tensordot(tensor, v, axes=([1], [0])).reshape(tensor.shape[0], -1)
    left = left.copy()
    for sl, size in zip(blocks.slices(), blocks.block_sizes):
        if size < 2:
            continue
        block = left[:, sl]
        w, _, _ = np.linalg.svd(block.conj().T @ contracted)
        left[:, sl] = block @ w
    return left


def _factor_product(vec: np.ndarray, dims: Sequence[int]) -> tuple[list[np.ndarray], float]:
    """Split a unit vector over `dims` into per-party unit factors.

    Returns the factors (the last one carrying the global phase) and the largest second
    singular value met along the way, which is zero exactly for product vectors.
    """
    if len(dims) == 1:
        return [vec.copy()], 0.0
    mat = vec.reshape(dims[0], -1)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    witness = float(s[1]) if s.size > 1 else 0.0
    head, tail = _canonical_phase(u[:, :1], (vh[:1, :] * s[0]).T)
    rest, inner = _factor_product(tail[:, 0], dims[1:])
    return [head[:, 0]] + rest, max(witness, inner)


def _orthonormalized(tensor: np.ndarray, bases: tuple[np.ndarray, ...]) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    """Nearest isometry per party, then coefficients re-read from the state.

    Accepted factors are orthonormal only up to the decision tolerance; the polar factor
    brings them to working precision. The overlap phase goes into the last party.
    """
    bases = [bases[0]] + [polar(b)[0] for b in bases[1:]]
    coeffs = np.empty(bases[0].shape[1])
    for ell in range(coeffs.size):
        amp = tensor
        for b in bases:
            amp = np.tensordot(b[:, ell].conj(), amp, axes=([0], [0]))
        amp = complex(amp)
        coeffs[ell] = abs(amp)
        if coeffs[ell] > 0.0:
            bases[-1][:, ell] *= amp / abs(amp)
    return tuple(bases), coeffs / np.linalg.norm(coeffs)


def check_schmidt_decomposable(
    state: StateVector,
    tol: float = DEFAULT_TOLERANCES.decision,
    rank_tol: float = DEFAULT_TOLERANCES.rank,
    group_tol: float = DEFAULT_TOLERANCES.group,
) -> MultiSchmidtDecomposition | SchmidtInfeasible:
    n = state.n_parties
    if n == 1:
        return MultiSchmidtDecomposition(np.ones(1), (state.amps.reshape(-1, 1).copy(),), state.party_dims)

    sd = schmidt_decompose(state, Bipartition.of([0], n), rank_tol)
    if n == 2:
        return MultiSchmidtDecomposition(sd.coeffs, (sd.left_basis, sd.right_basis), state.party_dims)

    tensor = state.tensor
    blocks = degeneracy_blocks(sd.coeffs, sd.rank, group_tol)
    left = sd.left_basis
    if any(size > 1 for size in blocks.block_sizes):
        left = _split_degenerate(tensor, left, blocks)
        left, _ = _canonical_phase(left, np.zeros_like(left))

    rest_dims = state.party_dims[1:]
    factors: list[list[np.ndarray]] = [[] for _ in range(n)]
    coeffs = np.empty(sd.rank)
    for ell in range(sd.rank):
        cofactor = np.tensordot(left[:, ell].conj(), tensor, axes=([0], [0])).reshape(-1)
        weight = float(np.linalg.norm(cofactor))
        parts, witness = _factor_product(cofactor / weight, rest_dims)
        if witness >= tol:
            logger.debug("cofactor %d is entangled (second singular value %.3e)", ell, witness)
            return SchmidtInfeasible(index=ell, witness=witness)
        coeffs[ell] = weight
        factors[0].append(left[:, ell])
        for p, vec in enumerate(parts, start=1):
            factors[p].append(vec)

    bases = tuple(np.column_stack(vs) for vs in factors)
    for p in range(1, n):
        residual = orthonormality_residual(bases[p])
        if residual >= tol:
            logger.debug("factors of party %d are not orthonormal (deviation %.3e)", p, residual)
            return SchmidtInfeasible(index=p, witness=residual, reason="non_orthogonal_factors")

    bases, coeffs = _orthonormalized(tensor, bases)
    order = np.argsort(-coeffs, kind="stable")
    return MultiSchmidtDecomposition(
        coeffs=coeffs[order],
        per_party_bases=tuple(b[:, order] for b in bases),
        party_dims=state.party_dims,
    )
