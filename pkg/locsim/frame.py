"""Tripartite states read in the three single-party Schmidt bases, and measurement
simulation between two of the parties.

The coefficient tensor a[l, m, n] = <l_A m_B n_C|psi> has flattenings whose Gram
matrices are the diagonal reduced spectra. A measurement {M_j} of one party is
reproduced by {L_j} on another when f [L_j A]_{l,(k,n)} = h [M_j B]_{k,(l,n)}, with A, B
the flattenings of the two parties. The closed-form candidate is
L_j = (M_j B)^{T_AB} A^dag D_A^-1; whatever part of the right-hand side lies outside
the row space of A is reported as the feasibility residual.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lstsq

from locsim.errors import IncompleteSource, InputError, NotTripartite, SingularSupport, ZeroProbabilityBranch
from locsim.protocol_sim import MeasurementSet, measure_branch
from locsim.schmidt import schmidt_decompose
from locsim.tensor import (
    Bipartition,
    LocalOperator,
    StateVector,
    complete_basis,
    frozen_array,
    local_operator,
    phase_invariant_distance,
)
from locsim.tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TripartiteSchmidtFrame:
    bases: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False)
    coeff_tensor: np.ndarray = field(repr=False)
    spectra: tuple[np.ndarray, np.ndarray, np.ndarray]
    party_dims: tuple[int, int, int]

    @property
    def basis_A(self) -> np.ndarray:
        return self.bases[0]

    @property
    def basis_B(self) -> np.ndarray:
        return self.bases[1]

    @property
    def basis_C(self) -> np.ndarray:
        return self.bases[2]

    @property
    def ranks(self) -> tuple[int, int, int]:
        return tuple(int(b.shape[1]) for b in self.bases)  # type: ignore[return-value]

    def full_basis(self, party: int) -> np.ndarray:
        return complete_basis(self.bases[party])


@dataclass(frozen=True)
class FrameResiduals:
    residual_A: float
    residual_B: float
    residual_C: float

    @property
    def max(self) -> float:
        return max(self.residual_A, self.residual_B, self.residual_C)


@dataclass(frozen=True, eq=False)
class ProjectorCheck:
    projector: np.ndarray = field(repr=False)
    idempotence_residual: float
    hermiticity_residual: float


@dataclass(frozen=True, eq=False)
class MeasureSimResult:
    target_ops: MeasurementSet = field(repr=False)
    feasibility_residuals: tuple[float, ...]
    completeness_residual: float
    f_constants: tuple[float, ...]
    h_constants: tuple[float, ...]
    source: int = 1
    target: int = 0
    frame_blocks: tuple[np.ndarray, ...] = field(default=(), repr=False)
    scales: tuple[float, ...] = ()

    def feasible(self, tol: float = DEFAULT_TOLERANCES.decision) -> bool:
        return all(r < tol for r in self.feasibility_residuals)


@dataclass(frozen=True)
class SimCheck:
    outcome_index: int
    skipped: bool
    aligned_distance: float | None = None
    raw_distance: float | None = None


def build_frame(state: StateVector, tols: Tolerances = DEFAULT_TOLERANCES) -> TripartiteSchmidtFrame:
    if state.n_parties != 3:
        raise NotTripartite(f"expected three parties, got {state.n_parties}")
    bases = []
    spectra = []
    for p in range(3):
        sd = schmidt_decompose(state, Bipartition.of([p], 3), tols.rank)
        bases.append(sd.left_basis)
        spectra.append(sd.spectrum)
    a = np.einsum("ia,jb,kc,ijk->abc", bases[0].conj(), bases[1].conj(), bases[2].conj(), state.tensor)
    return TripartiteSchmidtFrame(tuple(bases), a, tuple(spectra), state.party_dims)  # type: ignore[arg-type]


def reconstruct_frame(frame: TripartiteSchmidtFrame) -> StateVector:
    a, b, c = frame.bases
    tensor = np.einsum("ia,jb,kc,abc->ijk", a, b, c, frame.coeff_tensor)
    return StateVector(frame.party_dims, frozen_array(tensor.reshape(-1)))


def permute_frame(frame: TripartiteSchmidtFrame, order: Sequence[int]) -> TripartiteSchmidtFrame:
    """Frame whose party k is the old party order[k]."""
    order = [int(p) for p in order]
    if sorted(order) != [0, 1, 2]:
        raise InputError(f"{order} is not a permutation of three parties")
    return TripartiteSchmidtFrame(
        bases=tuple(frame.bases[p] for p in order),  # type: ignore[arg-type]
        coeff_tensor=frame.coeff_tensor.transpose(order),
        spectra=tuple(frame.spectra[p] for p in order),  # type: ignore[arg-type]
        party_dims=tuple(frame.party_dims[p] for p in order),  # type: ignore[arg-type]
    )


def flattening(frame: TripartiteSchmidtFrame, party: int) -> np.ndarray:
    """The coefficient tensor with `party` as rows and the other two (in order) as columns."""
    a = np.moveaxis(frame.coeff_tensor, party, 0)
    return a.reshape(a.shape[0], -1)


def partial_transpose_ab(matrix: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    """[x, (y, z)] with shape (p, q*r) -> [y, (x, z)] with shape (q, p*r)."""
    p, q, r = dims
    return np.asarray(matrix).reshape(p, q, r).transpose(1, 0, 2).reshape(q, p * r)


def swap_flatten(frame: TripartiteSchmidtFrame) -> np.ndarray:
    """B = A^{T_AB}: [B]_{m,(l n)} = a_{l m n}."""
    r_a, r_b, r_c = frame.ranks
    return partial_transpose_ab(flattening(frame, 0), (r_a, r_b, r_c))


def verify_frame(frame: TripartiteSchmidtFrame) -> FrameResiduals:
    residuals = []
    for p in range(3):
        x = flattening(frame, p)
        residuals.append(float(np.linalg.norm(x @ x.conj().T - np.diag(frame.spectra[p]), 2)))
    return FrameResiduals(*residuals)


def row_space_projector(frame: TripartiteSchmidtFrame, tols: Tolerances = DEFAULT_TOLERANCES) -> ProjectorCheck:
    a = flattening(frame, 0)
    inv = _support_inverse(frame.spectra[0], tols)
    projector = a.conj().T @ (inv[:, None] * a)
    return ProjectorCheck(
        projector=projector,
        idempotence_residual=float(np.linalg.norm(projector @ projector - projector, 2)),
        hermiticity_residual=float(np.linalg.norm(projector - projector.conj().T, 2)),
    )


def _support_inverse(spectrum: np.ndarray, tols: Tolerances) -> np.ndarray:
    inv = np.zeros_like(spectrum)
    keep = spectrum > tols.support
    inv[keep] = 1.0 / spectrum[keep]
    return inv


def _as_matrix(op: LocalOperator | np.ndarray) -> np.ndarray:
    return op.matrix if isinstance(op, LocalOperator) else local_operator(op).matrix


def _frame_matrix(frame: TripartiteSchmidtFrame, party: int, op: LocalOperator | np.ndarray) -> np.ndarray:
    full = frame.full_basis(party)
    return full.conj().T @ _as_matrix(op) @ full


def normalization_constants(
    frame: TripartiteSchmidtFrame,
    ops: Sequence[LocalOperator | np.ndarray] | MeasurementSet,
    side: int,
    tols: Tolerances = DEFAULT_TOLERANCES,
    frame_coordinates: bool = False,
) -> list[float]:
    """(sum_{k,m} spectrum_m |O_km|^2)^(-1/2) per operator, O read in `side`'s frame.

    With `frame_coordinates` the operators are taken as already written in the frame.
    """
    if isinstance(ops, MeasurementSet):
        ops = list(ops.operators)
    spectrum = frame.spectra[side]
    r = spectrum.size
    out = []
    for j, op in enumerate(ops):
        coeffs = np.asarray(_as_matrix(op)) if frame_coordinates else _frame_matrix(frame, side, op)
        weight = float(np.sum(spectrum[None, :] * np.abs(coeffs[:, :r]) ** 2))
        if np.sqrt(max(weight, 0.0)) < tols.zero_probability:
            raise ZeroProbabilityBranch(f"operator {j} annihilates the state on party {side}")
        out.append(weight**-0.5)
    return out


def _rhs(frame: TripartiteSchmidtFrame, op: LocalOperator | np.ndarray) -> np.ndarray:
    """(M B)^{T_AB} as an (r_A, d_B, r_C) array, B's outputs kept over the full frame."""
    r_a, r_b, r_c = frame.ranks
    d_b = frame.party_dims[1]
    coeffs = _frame_matrix(frame, 1, op)[:, :r_b]
    mb = coeffs @ flattening(frame, 1)
    return partial_transpose_ab(mb, (d_b, r_a, r_c)).reshape(r_a, d_b, r_c)


def _oriented(frame: TripartiteSchmidtFrame, source: int, target: int) -> TripartiteSchmidtFrame:
    if {source, target} - {0, 1, 2} or source == target:
        raise InputError(f"source {source} and target {target} must be two different parties of three")
    if (source, target) == (1, 0):
        return frame
    spectator = ({0, 1, 2} - {source, target}).pop()
    return permute_frame(frame, [target, source, spectator])


def least_squares_partner(
    frame: TripartiteSchmidtFrame,
    source_ops: MeasurementSet,
    source: int = 1,
    target: int = 0,
) -> list[np.ndarray]:
    """Minimum-norm X with X A = (M_j B)^{T_AB} restricted to reachable columns, per outcome.

    Independent of the closed form; both agree whenever the equation is solvable.
    """
    pf = _oriented(frame, source, target)
    r_a, r_b, r_c = pf.ranks
    a = flattening(pf, 0)
    out = []
    for op in source_ops.operators:
        rhs = _rhs(pf, op)[:, :r_b, :].reshape(r_a, r_b * r_c)
        solution, *_ = lstsq(a.T, rhs.T)
        out.append(solution.T)
    return out


def construct_simulating_measurement(
    frame: TripartiteSchmidtFrame,
    source_ops: MeasurementSet,
    tols: Tolerances = DEFAULT_TOLERANCES,
    source: int = 1,
    target: int = 0,
) -> MeasureSimResult:
    residual = source_ops.completeness_residual
    if residual > tols.completeness:
        raise IncompleteSource(f"source operators miss completeness by {residual:.3e}")
    pf = _oriented(frame, source, target)
    if source_ops.dim != pf.party_dims[1]:
        raise InputError(f"measurement of dimension {source_ops.dim} cannot act on party {source}")

    r_a, r_b, r_c = pf.ranks
    d_a, d_b = pf.party_dims[0], pf.party_dims[1]
    a = flattening(pf, 0)
    alpha2 = pf.spectra[0]
    inv = _support_inverse(alpha2, tols)
    unsupported = alpha2 <= tols.support
    frame_a = pf.full_basis(0)

    target_ops = []
    residuals, f_consts, h_consts, blocks, scales = [], [], [], [], []
    for j, op in enumerate(source_ops.operators):
        rhs = _rhs(pf, op)
        p_source = float(np.linalg.norm(rhs) ** 2)
        frame_op = np.zeros((d_a, d_a), dtype=np.complex128)
        if j == 0:
            frame_op[r_a:, r_a:] = np.eye(d_a - r_a)

        if np.sqrt(p_source) < tols.zero_probability:
            logger.warning("outcome %d never occurs on party %d; its simulating operator is zero", j, source)
            target_ops.append(local_operator(frame_a @ frame_op @ frame_a.conj().T, target))
            residuals.append(0.0)
            f_consts.append(0.0)
            h_consts.append(0.0)
            blocks.append(np.zeros((r_a, r_a), dtype=np.complex128))
            scales.append(0.0)
            continue

        if unsupported.any() and np.linalg.norm(rhs[unsupported]) > tols.decision * np.sqrt(p_source):
            raise SingularSupport(f"outcome {j} needs rows of A outside the support of D_A")

        reachable = rhs[:, :r_b, :].reshape(r_a, r_b * r_c)
        raw = (reachable @ a.conj().T) * inv[None, :]
        raw_weight = float(np.sum(alpha2[None, :] * np.abs(raw) ** 2))
        scale = np.sqrt(p_source / raw_weight) if raw_weight > 0.0 else 0.0
        block = scale * raw
        frame_op[:r_a, :r_a] = block
        target_op = local_operator(frame_a @ frame_op @ frame_a.conj().T, target)
        target_ops.append(target_op)

        h = p_source**-0.5
        if raw_weight > 0.0:
            f = normalization_constants(pf, [frame_op], 0, tols, frame_coordinates=True)[0]
        else:
            f = 0.0
        lhs = np.zeros((d_a, d_b, r_c), dtype=np.complex128)
        lhs[:, :r_b, :] = (f * frame_op[:, :r_a] @ a).reshape(d_a, r_b, r_c)
        target_rhs = np.zeros((d_a, d_b, r_c), dtype=np.complex128)
        target_rhs[:r_a] = h * rhs
        feasibility = float(np.linalg.norm(lhs - target_rhs) / np.linalg.norm(target_rhs))

        residuals.append(feasibility)
        f_consts.append(float(f))
        h_consts.append(float(h))
        blocks.append(block)
        scales.append(float(scale))
        logger.debug("outcome %d: scale %.6g, feasibility residual %.3e", j, scale, feasibility)

    support_sum = sum(b.conj().T @ b for b in blocks)
    completeness = float(np.linalg.norm(support_sum - np.eye(r_a), 2))
    return MeasureSimResult(
        target_ops=MeasurementSet(tuple(target_ops)),
        feasibility_residuals=tuple(residuals),
        completeness_residual=completeness,
        f_constants=tuple(f_consts),
        h_constants=tuple(h_consts),
        source=source,
        target=target,
        frame_blocks=tuple(blocks),
        scales=tuple(scales),
    )


def verify_measure_sim(
    frame: TripartiteSchmidtFrame,
    source_ops: MeasurementSet,
    result: MeasureSimResult,
    tols: Tolerances = DEFAULT_TOLERANCES,
) -> list[SimCheck]:
    """Per feasible outcome: the simulating branch against the original branch.

    The aligned distance compares the amplitudes [L_j A]_{l,(k,n)} with [M_j B]_{k,(l,n)};
    the raw distance compares the two post-measurement states directly.
    """
    pf = _oriented(frame, result.source, result.target)
    state = reconstruct_frame(frame).normalized()
    r_a, r_b, r_c = pf.ranks
    d_a, d_b = pf.party_dims[0], pf.party_dims[1]
    a = flattening(pf, 0)

    checks = []
    for j, (m_op, l_op) in enumerate(zip(source_ops.operators, result.target_ops.operators)):
        if result.feasibility_residuals[j] >= tols.decision or result.h_constants[j] == 0.0:
            checks.append(SimCheck(j, skipped=True))
            continue
        l_frame = _frame_matrix(pf, 0, l_op)
        lhs = np.zeros((d_a, d_b, r_c), dtype=np.complex128)
        lhs[:, :r_b, :] = (l_frame[:, :r_a] @ a).reshape(d_a, r_b, r_c)
        rhs = np.zeros((d_a, d_b, r_c), dtype=np.complex128)
        rhs[:r_a] = _rhs(pf, m_op)
        aligned = 1.0 - abs(np.vdot(lhs, rhs)) / (np.linalg.norm(lhs) * np.linalg.norm(rhs))

        simulated = measure_branch(state, l_op, result.target, j, tols)
        original = measure_branch(state, m_op, result.source, j, tols)
        raw = phase_invariant_distance(simulated.post_state, original.post_state)
        checks.append(SimCheck(j, False, float(min(1.0, max(0.0, aligned))), raw))
    return checks
