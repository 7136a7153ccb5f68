"""Deciding and constructing partner unitaries on bipartite pure states.

A unitary on one party can be reproduced by the other party exactly when, written in
the acting party's Schmidt frame, it is block diagonal over the degeneracy blocks of
the Schmidt spectrum (zero coefficients forming their own block). The partner is the
transpose of the support block, written in the simulating party's frame, padded with
the identity on that party's complement.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import polar

from locsim.errors import DimensionMismatch, NotBipartite, NotSimulable, NotUnitary
from locsim.schmidt import DegeneracyBlocks, SchmidtDecomposition, degeneracy_blocks, schmidt_decompose
from locsim.tensor import (
    Bipartition,
    LocalOperator,
    StateVector,
    apply_local,
    complete_basis,
    local_operator,
    permute_parties,
    phase_invariant_distance,
    unitarity_residual,
)
from locsim.tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class UnitarySimVerdict:
    simulable: bool
    blocks: DegeneracyBlocks
    offblock_residual: float
    partner: LocalOperator | None = field(default=None, repr=False)
    verification_distance: float | None = None
    acting_party: int = 1


@dataclass(frozen=True, eq=False)
class OracleResult:
    candidate: np.ndarray = field(repr=False)
    unitarity_residual: float


@dataclass(frozen=True, eq=False)
class _Analysis:
    sd: SchmidtDecomposition
    acting_frame: np.ndarray
    frame_op: np.ndarray
    blocks: DegeneracyBlocks
    offblock_residual: float


def _require_bipartite(state: StateVector) -> None:
    if state.n_parties != 2:
        raise NotBipartite(f"expected a bipartite state, got {state.n_parties} parties")


def _as_matrix(op: LocalOperator | np.ndarray) -> np.ndarray:
    if isinstance(op, LocalOperator):
        return op.matrix
    return local_operator(op).matrix


def _oriented(state: StateVector, acting_party: int) -> StateVector:
    """The state with the acting party moved to position 1."""
    if acting_party not in (0, 1):
        raise NotBipartite(f"acting party must be 0 or 1, got {acting_party}")
    return state if acting_party == 1 else permute_parties(state, [1, 0])


def frame_basis(state: StateVector, party: int, rank_tol: float = DEFAULT_TOLERANCES.rank) -> np.ndarray:
    """Full Schmidt frame of one party: Schmidt vectors first, then a completion."""
    _require_bipartite(state)
    sd = schmidt_decompose(state, Bipartition.of([0], 2), rank_tol)
    return complete_basis(sd.left_basis if party == 0 else sd.right_basis)


def to_schmidt_frame(op: LocalOperator | np.ndarray, basis_columns: np.ndarray) -> np.ndarray:
    matrix = _as_matrix(op)
    basis_columns = np.asarray(basis_columns, dtype=np.complex128)
    if basis_columns.shape[0] != matrix.shape[0] or basis_columns.shape[1] > matrix.shape[0]:
        raise DimensionMismatch(f"basis of shape {basis_columns.shape} does not fit a {matrix.shape[0]}-dim operator")
    full = complete_basis(basis_columns)
    return full.conj().T @ matrix @ full


def from_schmidt_frame(frame_matrix: np.ndarray, basis_columns: np.ndarray) -> np.ndarray:
    full = complete_basis(np.asarray(basis_columns, dtype=np.complex128))
    return full @ np.asarray(frame_matrix) @ full.conj().T


def _analyse(state: StateVector, op: LocalOperator | np.ndarray, tols: Tolerances, acting_party: int) -> _Analysis:
    _require_bipartite(state)
    matrix = _as_matrix(op)
    oriented = _oriented(state, acting_party)
    if matrix.shape[0] != oriented.party_dims[1]:
        raise DimensionMismatch(
            f"operator of dimension {matrix.shape[0]} cannot act on party {acting_party} "
            f"of dimension {state.party_dims[acting_party]}"
        )
    residual = unitarity_residual(matrix)
    if residual > tols.unitarity:
        raise NotUnitary(f"||U^dag U - I|| = {residual:.3e} exceeds {tols.unitarity:g}")

    sd = schmidt_decompose(oriented, Bipartition.of([0], 2), tols.rank)
    acting_frame = complete_basis(sd.right_basis, tols.arithmetic)
    frame_op = to_schmidt_frame(matrix, acting_frame)
    blocks = degeneracy_blocks(sd.coeffs, oriented.party_dims[1], tols.group)
    labels = blocks.labels()
    offblock = np.abs(frame_op[labels[:, None] != labels[None, :]])
    offblock_residual = float(offblock.max()) if offblock.size else 0.0
    return _Analysis(sd, acting_frame, frame_op, blocks, offblock_residual)


def _partner(analysis: _Analysis, simulator_dim: int) -> np.ndarray:
    r = analysis.sd.rank
    support_block, _ = polar(analysis.frame_op[:r, :r].T)
    frame_partner = np.eye(simulator_dim, dtype=np.complex128)
    frame_partner[:r, :r] = support_block
    simulator_frame = complete_basis(analysis.sd.left_basis)
    return simulator_frame @ frame_partner @ simulator_frame.conj().T


def verify_unitary_simulation(
    state: StateVector,
    U_B: LocalOperator | np.ndarray,
    U_A: LocalOperator | np.ndarray,
    acting_party: int = 1,
    tols: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Phase-invariant distance between the acting party's and the partner's results."""
    _require_bipartite(state)
    acting = local_operator(_as_matrix(U_B), acting_party)
    partner = local_operator(_as_matrix(U_A), 1 - acting_party)
    for op in (acting, partner):
        residual = unitarity_residual(op.matrix)
        if residual > tols.unitarity:
            raise NotUnitary(f"operator on party {op.party} has ||U^dag U - I|| = {residual:.3e}")
    original, _ = apply_local(state, acting)
    simulated, _ = apply_local(state, partner)
    return phase_invariant_distance(original, simulated)


def construct_partner_unitary(
    state: StateVector,
    U_B: LocalOperator | np.ndarray,
    tols: Tolerances = DEFAULT_TOLERANCES,
    acting_party: int = 1,
) -> LocalOperator:
    analysis = _analyse(state, U_B, tols, acting_party)
    if analysis.offblock_residual >= tols.decision:
        raise NotSimulable(
            f"operator mixes distinct Schmidt blocks (off-block residual {analysis.offblock_residual:.3e})"
        )
    simulator = 1 - acting_party
    return local_operator(_partner(analysis, state.party_dims[simulator]), simulator)


def check_unitary_simulable(
    state: StateVector,
    U_B: LocalOperator | np.ndarray,
    tols: Tolerances = DEFAULT_TOLERANCES,
    acting_party: int = 1,
) -> UnitarySimVerdict:
    analysis = _analyse(state, U_B, tols, acting_party)
    simulable = analysis.offblock_residual < tols.decision
    logger.debug(
        "blocks %s, off-block residual %.3e -> %s",
        analysis.blocks.block_sizes,
        analysis.offblock_residual,
        "simulable" if simulable else "not simulable",
    )
    if not simulable:
        return UnitarySimVerdict(False, analysis.blocks, analysis.offblock_residual, acting_party=acting_party)

    simulator = 1 - acting_party
    partner = local_operator(_partner(analysis, state.party_dims[simulator]), simulator)
    distance = verify_unitary_simulation(state, U_B, partner, acting_party, tols)
    if distance >= tols.verify:
        logger.warning("partner verification distance %.3e exceeds %g", distance, tols.verify)
    return UnitarySimVerdict(True, analysis.blocks, analysis.offblock_residual, partner, distance, acting_party)


def oracle_partner(
    state: StateVector,
    U_B: LocalOperator | np.ndarray,
    tols: Tolerances = DEFAULT_TOLERANCES,
    acting_party: int = 1,
) -> OracleResult:
    """Independent check: D U D^-1 on the Schmidt support must itself be unitary."""
    analysis = _analyse(state, U_B, tols, acting_party)
    d = analysis.sd.coeffs
    r = analysis.sd.rank
    candidate = (d[:, None] * analysis.frame_op[:r, :r]) / d[None, :]
    return OracleResult(candidate, unitarity_residual(candidate))
