"""Mirroring one party's measurement onto another party of a Schmidt-decomposable state.

The mirrored operators carry the source operators' coefficient matrices, read in the
source party's Schmidt frame and written back in the target party's frame. The
comparison report lists each necessary condition for the two protocols to agree as a
separate residual; it never asserts local-unitary equivalence.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from locsim.errors import IncompleteSource, InputError, RankMismatch, ZeroProbabilityBranch
from locsim.parsing import party_label
from locsim.schmidt import MultiSchmidtDecomposition
from locsim.tensor import (
    Bipartition,
    LocalOperator,
    StateVector,
    apply_local,
    completeness_residual,
    frozen_array,
    local_operator,
    matricize,
    phase_invariant_distance,
    reduced_density,
    swap_parties,
)
from locsim.tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    operators: tuple[LocalOperator, ...] = field(repr=False)

    @property
    def party(self) -> int:
        return self.operators[0].party

    @property
    def dim(self) -> int:
        return self.operators[0].dim

    @property
    def completeness_residual(self) -> float:
        return completeness_residual([op.matrix for op in self.operators])

    def __len__(self) -> int:
        return len(self.operators)

    def on(self, party: int) -> MeasurementSet:
        return MeasurementSet(tuple(op.on(party) for op in self.operators))


def measurement_set(matrices: Sequence[np.ndarray], party: int = 0) -> MeasurementSet:
    if not matrices:
        raise InputError("a measurement needs at least one operator")
    ops = tuple(local_operator(m, party) for m in matrices)
    if len({op.dim for op in ops}) != 1:
        raise InputError("measurement operators must share one dimension")
    return MeasurementSet(ops)


@dataclass(frozen=True, eq=False)
class BranchOutcome:
    outcome_index: int
    probability: float
    post_state: StateVector = field(repr=False)
    norm_constant: float


@dataclass(frozen=True)
class MirrorRecord:
    outcome_index: int
    source_probability: float
    target_probability: float
    probability_match: float
    spectator_state_distance: dict[int, float]
    swap_relation_distance: float
    bipartite_spectra_match: dict[str, float]


@dataclass(frozen=True)
class MirrorReport:
    source: int
    target: int
    records: tuple[MirrorRecord, ...]
    completeness_residual: float
    findings: tuple[str, ...] = ()

    @property
    def max_probability_match(self) -> float:
        return max((r.probability_match for r in self.records), default=0.0)

    @property
    def max_spectator_distance(self) -> float:
        return max((d for r in self.records for d in r.spectator_state_distance.values()), default=0.0)

    @property
    def max_swap_relation_distance(self) -> float:
        return max((r.swap_relation_distance for r in self.records), default=0.0)

    @property
    def max_spectra_deviation(self) -> float:
        return max((d for r in self.records for d in r.bipartite_spectra_match.values()), default=0.0)


def measure_branch(
    state: StateVector,
    op: LocalOperator,
    party: int | None = None,
    outcome_index: int = 0,
    tols: Tolerances = DEFAULT_TOLERANCES,
) -> BranchOutcome:
    if party is not None:
        op = op.on(party)
    result, norm = apply_local(state, op)
    if norm < tols.zero_probability:
        raise ZeroProbabilityBranch(f"outcome {outcome_index} on party {op.party} has norm {norm:.3e}")
    probability = norm**2
    return BranchOutcome(outcome_index, probability, result.normalized(), 1.0 / norm)


def _check_parties(msd: MultiSchmidtDecomposition, source: int, target: int) -> None:
    n = len(msd.party_dims)
    for p in (source, target):
        if not 0 <= p < n:
            raise InputError(f"party {p} does not exist in a {n}-party state")
    if source == target:
        raise InputError("source and target must be different parties")


def mirror_measurement(
    msd: MultiSchmidtDecomposition,
    source_ops: MeasurementSet,
    source: int,
    target: int,
    tols: Tolerances = DEFAULT_TOLERANCES,
) -> MeasurementSet:
    _check_parties(msd, source, target)
    d_s, d_t = msd.party_dims[source], msd.party_dims[target]
    if source_ops.dim != d_s:
        raise InputError(f"measurement of dimension {source_ops.dim} cannot act on party {source} of dimension {d_s}")
    residual = source_ops.completeness_residual
    if residual > tols.completeness:
        raise IncompleteSource(f"source operators miss completeness by {residual:.3e}")

    frame_s = msd.frame(source)
    frame_t = msd.frame(target)
    mirrored = []
    for j, op in enumerate(source_ops.operators):
        coeffs = frame_s.conj().T @ op.matrix @ frame_s
        if d_t >= d_s:
            padded = np.zeros((d_t, d_t), dtype=np.complex128)
            padded[:d_s, :d_s] = coeffs
            if j == 0:
                padded[d_s:, d_s:] = np.eye(d_t - d_s)
        else:
            leak = max(np.abs(coeffs[d_t:, :d_t]).max(), np.abs(coeffs[:d_t, d_t:]).max())
            if leak > tols.arithmetic:
                raise RankMismatch(
                    f"outcome {j} couples the leading {d_t} frame vectors of party {source} "
                    f"to the rest (coupling {leak:.3e}); party {target} has only {d_t} dimensions"
                )
            padded = coeffs[:d_t, :d_t]
        mirrored.append(local_operator(frame_t @ padded @ frame_t.conj().T, target))

    out = MeasurementSet(tuple(mirrored))
    logger.debug("mirrored %d outcomes %d -> %d, completeness %.3e", len(out), source, target, out.completeness_residual)
    return out


def mirror_unitary(
    msd: MultiSchmidtDecomposition,
    unitary: LocalOperator | np.ndarray,
    source: int,
    target: int,
    tols: Tolerances = DEFAULT_TOLERANCES,
) -> MeasurementSet:
    """A unitary is a complete one-outcome measurement; mirror it as such."""
    matrix = unitary.matrix if isinstance(unitary, LocalOperator) else unitary
    return mirror_measurement(msd, measurement_set([matrix], source), source, target, tols)


def _frame_coordinates(state: StateVector, frames: Sequence[np.ndarray]) -> np.ndarray:
    tensor = state.tensor
    for p, frame in enumerate(frames):
        tensor = np.moveaxis(np.tensordot(frame.conj().T, tensor, axes=([1], [p])), 0, p)
    return tensor


def _padded_state(tensor: np.ndarray, dims: Sequence[int]) -> StateVector:
    padded = np.zeros(tuple(dims), dtype=np.complex128)
    padded[tuple(slice(0, s) for s in tensor.shape)] = tensor
    return StateVector(tuple(dims), frozen_array(padded.reshape(-1)))


def swap_relation_distance(
    msd: MultiSchmidtDecomposition,
    source_branch: StateVector,
    target_branch: StateVector,
    source: int,
    target: int,
) -> float:
    """Distance between the original branch and the party-swapped mirrored branch,
    both read in the Schmidt frames of `msd`."""
    frames = [msd.frame(p) for p in range(len(msd.party_dims))]
    src = _frame_coordinates(source_branch, frames)
    tgt = _frame_coordinates(target_branch, frames)
    common = list(msd.party_dims)
    common[source] = common[target] = max(common[source], common[target])
    swapped = swap_parties(_padded_state(tgt, common), source, target)
    return phase_invariant_distance(swapped, _padded_state(src, common))


def all_cuts(n_parties: int) -> list[Bipartition]:
    cuts = []
    others = list(range(1, n_parties))
    for size in range(0, n_parties - 1):
        for extra in itertools.combinations(others, size):
            cuts.append(Bipartition.of((0,) + extra, n_parties))
    return cuts


def _spectrum(state: StateVector, cut: Bipartition) -> np.ndarray:
    s = np.linalg.svd(matricize(state, cut).matrix, compute_uv=False)
    return np.sort(s**2)[::-1]


def spectra_deviation(a: StateVector, b: StateVector, cut: Bipartition) -> float:
    sa, sb = _spectrum(a, cut), _spectrum(b, cut)
    size = max(sa.size, sb.size)
    sa = np.pad(sa, (0, size - sa.size))
    sb = np.pad(sb, (0, size - sb.size))
    return float(np.abs(sa - sb).max())


def compare_branches(
    msd: MultiSchmidtDecomposition,
    source_ops: MeasurementSet,
    source: int,
    target: int,
    tols: Tolerances = DEFAULT_TOLERANCES,
) -> MirrorReport:
    mirrored = mirror_measurement(msd, source_ops, source, target, tols)
    state = msd.reconstruct().normalized()
    n = state.n_parties
    spectators = [p for p in range(n) if p not in (source, target)]
    cuts = all_cuts(n)

    records = []
    findings = []
    for j, (op_s, op_t) in enumerate(zip(source_ops.operators, mirrored.operators)):
        try:
            src = measure_branch(state, op_s, source, j, tols)
        except ZeroProbabilityBranch:
            src = None
        try:
            tgt = measure_branch(state, op_t, target, j, tols)
        except ZeroProbabilityBranch:
            tgt = None
        if src is None or tgt is None:
            p_s = src.probability if src else 0.0
            p_t = tgt.probability if tgt else 0.0
            if src is not None or tgt is not None:
                findings.append(f"outcome {j}: only one of the two branches occurs (p={p_s:.3g} vs {p_t:.3g})")
            logger.warning("outcome %d has a zero-probability branch; residuals not computed", j)
            records.append(MirrorRecord(j, p_s, p_t, abs(p_t - p_s), {}, 0.0, {}))
            continue

        spectator = {
            p: float(np.linalg.norm(reduced_density(tgt.post_state, [p]) - reduced_density(src.post_state, [p]), 2))
            for p in spectators
        }
        swap = swap_relation_distance(msd, src.post_state, tgt.post_state, source, target)
        spectra = {cut.label: spectra_deviation(tgt.post_state, src.post_state, cut) for cut in cuts}
        for label, deviation in spectra.items():
            if deviation > tols.verify:
                findings.append(
                    f"outcome {j}: entanglement spectrum across cut {label} differs by {deviation:.6g} "
                    f"between the branch of party {party_label(target)} and the branch of party {party_label(source)}"
                )
        records.append(
            MirrorRecord(
                outcome_index=j,
                source_probability=src.probability,
                target_probability=tgt.probability,
                probability_match=abs(tgt.probability - src.probability),
                spectator_state_distance=spectator,
                swap_relation_distance=swap,
                bipartite_spectra_match=spectra,
            )
        )

    if findings:
        logger.info("mirror %d -> %d: %d spectrum findings", source, target, len(findings))
    return MirrorReport(source, target, tuple(records), mirrored.completeness_residual, tuple(findings))
