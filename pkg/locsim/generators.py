"""Seeded instance generators.

Every generator is a pure function of its parameters and a 64-bit seed. The bit
generator is PCG64 (`numpy.random.default_rng`); `SeedSequence(seed).spawn` hands one
child stream to each generated object, so adding a block or a party never shifts the
draws of the others.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag, qr

from locsim.errors import DimensionMismatch, InfeasibleSpectrum, InputError
from locsim.protocol_sim import MeasurementSet, measurement_set
from locsim.tensor import LocalOperator, StateVector, local_operator, make_state


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.default_rng(child) for child in children]


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Ginibre matrix with the phases of R's diagonal pushed into Q."""
    q, r = qr(_ginibre(rng, dim, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def _check_dims(dims: Sequence[int], minimum: int = 2) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < minimum for d in dims):
        raise DimensionMismatch(f"dims must be nonempty and each >= {minimum}, got {list(dims)}")
    return dims


def gen_random_state(dims: Sequence[int], seed: int) -> StateVector:
    dims = _check_dims(dims)
    (rng,) = _streams(seed, 1)
    amps = _ginibre(rng, math.prod(dims), 1)[:, 0]
    return make_state(dims, amps, renormalize=True)


def gen_random_unitary(dim: int, seed: int, party: int = 0) -> LocalOperator:
    if dim < 1:
        raise DimensionMismatch(f"dim must be >= 1, got {dim}")
    (rng,) = _streams(seed, 1)
    return local_operator(haar_unitary(dim, rng), party)


def gen_block_unitary(block_sizes: Sequence[int], seed: int, party: int = 0) -> LocalOperator:
    sizes = [int(b) for b in block_sizes]
    if not sizes or any(b < 1 for b in sizes):
        raise InputError(f"block sizes must be positive, got {sizes}")
    blocks = [haar_unitary(size, rng) for size, rng in zip(sizes, _streams(seed, len(sizes)))]
    return local_operator(block_diag(*blocks), party)


def _descending_values(rng: np.random.Generator, count: int) -> np.ndarray:
    """Strictly descending positive values with gaps well above any grouping tolerance."""
    gaps = rng.uniform(0.5, 1.5, size=count)
    return np.cumsum(gaps)[::-1]


def gen_degenerate_state(dims: Sequence[int], block_sizes: Sequence[int], seed: int) -> StateVector:
    """State whose A|rest Schmidt coefficients repeat with the given multiplicities."""
    dims = _check_dims(dims)
    sizes = [int(b) for b in block_sizes]
    if not sizes or any(b < 1 for b in sizes):
        raise InputError(f"block sizes must be positive, got {sizes}")
    if len(dims) < 2:
        raise DimensionMismatch("a Schmidt spectrum needs at least two parties")
    d_a, d_rest = dims[0], math.prod(dims[1:])
    total = sum(sizes)
    if total > min(d_a, d_rest):
        raise InfeasibleSpectrum(f"{total} Schmidt coefficients do not fit the cut {d_a} x {d_rest}")

    value_rng, left_rng, right_rng = _streams(seed, 3)
    coeffs = np.repeat(_descending_values(value_rng, len(sizes)), sizes)
    coeffs = coeffs / np.linalg.norm(coeffs)
    left = haar_unitary(d_a, left_rng)[:, :total]
    right = haar_unitary(d_rest, right_rng)[:, :total]
    matrix = (left * coeffs) @ right.T
    return make_state(dims, matrix.reshape(-1), renormalize=True)


def gen_schmidt_decomposable(
    dims: Sequence[int],
    rank: int,
    seed: int,
    coeffs: Sequence[float] | None = None,
) -> StateVector:
    """sum_l c_l (x)_P U_P|l> with independent Haar U_P; `coeffs` fixes c instead of drawing it."""
    dims = _check_dims(dims)
    if rank < 1 or rank > min(dims):
        raise InfeasibleSpectrum(f"rank {rank} must lie in 1..{min(dims)} for dims {list(dims)}")
    rngs = _streams(seed, len(dims) + 1)
    if coeffs is None:
        values = np.sort(rngs[0].uniform(0.1, 1.0, size=rank))[::-1]
    else:
        values = np.asarray(coeffs, dtype=float)
        if values.size != rank or np.any(values <= 0):
            raise InputError(f"need {rank} positive coefficients, got {list(values)}")
    values = values / np.linalg.norm(values)

    columns = [haar_unitary(d, rng)[:, :rank] for d, rng in zip(dims, rngs[1:])]
    amps = np.zeros(math.prod(dims), dtype=np.complex128)
    for ell, c in enumerate(values):
        term = np.ones(1, dtype=np.complex128)
        for cols in columns:
            term = np.kron(term, cols[:, ell])
        amps += c * term
    return make_state(dims, amps, renormalize=True)


def gen_measurement_set(
    dim: int,
    n_outcomes: int,
    seed: int,
    projective: bool = False,
    party: int = 0,
) -> MeasurementSet:
    """Complete measurement from the first `dim` columns of a Haar unitary, cut into row blocks.

    With `projective`, a Haar basis of C^dim is grouped into `n_outcomes` orthogonal projectors.
    """
    if dim < 1 or n_outcomes < 1:
        raise InputError(f"need dim >= 1 and at least one outcome, got dim {dim}, {n_outcomes} outcomes")
    (rng,) = _streams(seed, 1)
    if projective:
        if n_outcomes > dim:
            raise InputError(f"{n_outcomes} orthogonal projectors do not fit dimension {dim}")
        basis = haar_unitary(dim, rng)
        groups = np.array_split(np.arange(dim), n_outcomes)
        return measurement_set([basis[:, g] @ basis[:, g].conj().T for g in groups], party)

    isometry = haar_unitary(n_outcomes * dim, rng)[:, :dim]
    return measurement_set([isometry[j * dim : (j + 1) * dim, :] for j in range(n_outcomes)], party)
