"""Seeded property suites, run instance by instance on a thread pool.

Instance i of a batch uses seed base_seed + i; results come back in seed order whatever
the worker count.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from locsim.errors import InputError
from locsim.frame import (
    build_frame,
    construct_simulating_measurement,
    least_squares_partner,
    verify_frame,
    verify_measure_sim,
)
from locsim.generators import (
    gen_block_unitary,
    gen_degenerate_state,
    gen_measurement_set,
    gen_random_state,
    gen_random_unitary,
    gen_schmidt_decomposable,
)
from locsim.protocol_sim import all_cuts, compare_branches, measurement_set
from locsim.schmidt import check_schmidt_decomposable, reconstruct, schmidt_decompose
from locsim.tensor import phase_invariant_distance
from locsim.tolerances import DEFAULT_TOLERANCES, Tolerances
from locsim.unitary_sim import check_unitary_simulable, frame_basis, oracle_partner

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstanceResult:
    seed: int
    passed: bool
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class BatchSummary:
    suite: str
    base_seed: int
    results: tuple[InstanceResult, ...]

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.results)

    @property
    def failed_seeds(self) -> list[int]:
        return [r.seed for r in self.results if not r.passed]

    def maxima(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in self.results:
            for key, value in r.metrics.items():
                out[key] = max(out.get(key, value), value)
        return out


def _child_seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _schmidt_round_trip(seed: int, tols: Tolerances) -> InstanceResult:
    param_seed, state_seed = _child_seeds(seed, 2)
    rng = np.random.default_rng(param_seed)
    n = int(rng.integers(2, 4))
    dims = [int(d) for d in rng.integers(2, 5, size=n)]
    state = gen_random_state(dims, state_seed)
    worst = max(
        phase_invariant_distance(reconstruct(schmidt_decompose(state, cut, tols.rank)), state) for cut in all_cuts(n)
    )
    return InstanceResult(seed, worst < 1e-10, {"reconstruction_distance": worst})


def _random_partition(rng: np.random.Generator, dim: int) -> list[int]:
    total = int(rng.integers(1, dim + 1))
    sizes = []
    while total:
        size = int(rng.integers(1, total + 1))
        sizes.append(size)
        total -= size
    return sizes


def _unitary_positive(seed: int, tols: Tolerances) -> InstanceResult:
    param_seed, state_seed, op_seed = _child_seeds(seed, 3)
    rng = np.random.default_rng(param_seed)
    dim = int(rng.integers(2, 5))
    blocks = _random_partition(rng, dim)
    state = gen_degenerate_state([dim, dim], blocks, state_seed)
    op_blocks = blocks + ([dim - sum(blocks)] if sum(blocks) < dim else [])
    frame = frame_basis(state, 1, tols.rank)
    op = frame @ gen_block_unitary(op_blocks, op_seed).matrix @ frame.conj().T
    verdict = check_unitary_simulable(state, op, tols)
    oracle = oracle_partner(state, op, tols)
    distance = verdict.verification_distance if verdict.verification_distance is not None else 1.0
    passed = verdict.simulable and distance < tols.verify and oracle.unitarity_residual < 1e-8
    return InstanceResult(
        seed,
        passed,
        {
            "offblock_residual": verdict.offblock_residual,
            "verification_distance": distance,
            "oracle_residual": oracle.unitarity_residual,
        },
    )


def _unitary_negative(seed: int, tols: Tolerances) -> InstanceResult:
    param_seed, state_seed, op_seed = _child_seeds(seed, 3)
    rng = np.random.default_rng(param_seed)
    dim = int(rng.integers(2, 5))
    state = gen_random_state([dim, dim], state_seed)
    op = gen_random_unitary(dim, op_seed)
    verdict = check_unitary_simulable(state, op, tols)
    oracle = oracle_partner(state, op, tols)
    passed = not verdict.simulable and oracle.unitarity_residual > 1e-4
    return InstanceResult(
        seed,
        passed,
        {"offblock_residual": verdict.offblock_residual, "oracle_residual": oracle.unitarity_residual},
    )


def _frame_flattenings(seed: int, tols: Tolerances) -> InstanceResult:
    param_seed, state_seed = _child_seeds(seed, 2)
    rng = np.random.default_rng(param_seed)
    dims = [int(d) for d in rng.integers(2, 4, size=3)]
    frame = build_frame(gen_random_state(dims, state_seed), tols)
    worst = verify_frame(frame).max
    return InstanceResult(seed, worst < tols.verify, {"flattening_residual": worst})


def _protocol(seed: int, tols: Tolerances) -> InstanceResult:
    param_seed, state_seed, op_seed = _child_seeds(seed, 3)
    rng = np.random.default_rng(param_seed)
    dim = int(rng.integers(2, 4))
    rank = int(rng.integers(1, dim + 1))
    outcomes = int(rng.integers(2, 4))
    state = gen_schmidt_decomposable([dim] * 3, rank, state_seed)
    msd = check_schmidt_decomposable(state, tols.decision, tols.rank, tols.group)
    if not msd.feasible:
        return InstanceResult(seed, False, {"decomposability_witness": msd.witness})
    report = compare_branches(msd, gen_measurement_set(dim, outcomes, op_seed, party=1), 1, 0, tols)
    metrics = {
        "probability_match": report.max_probability_match,
        "spectator_distance": report.max_spectator_distance,
        "swap_relation_distance": report.max_swap_relation_distance,
        "completeness_residual": report.completeness_residual,
    }
    passed = (
        metrics["probability_match"] < 1e-10
        and metrics["spectator_distance"] < 1e-9
        and metrics["swap_relation_distance"] < 1e-9
        and metrics["completeness_residual"] < tols.completeness
    )
    return InstanceResult(seed, passed, metrics)


MEASURE_SIM_KINDS = ("generic", "scalar", "frame-diagonal")


def _outcome_weights(seed: int, outcomes: int, dim: int) -> np.ndarray:
    """Complex weights w[j, k] with sum_j |w[j, k]|^2 = 1 for every k."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((outcomes, dim)) + 1j * rng.standard_normal((outcomes, dim))
    return g / np.linalg.norm(g, axis=0)


def _measure_sim(seed: int, tols: Tolerances) -> InstanceResult:
    """Instance kinds rotate with the seed: a generic state with a Haar measurement must be
    infeasible, scalar measurements and frame-diagonal measurements on decomposable states
    must be simulated. The closed form is compared with least squares on every outcome."""
    param_seed, state_seed, op_seed = _child_seeds(seed, 3)
    rng = np.random.default_rng(param_seed)
    kind = MEASURE_SIM_KINDS[seed % len(MEASURE_SIM_KINDS)]
    outcomes = int(rng.integers(2, 4))
    if kind == "frame-diagonal":
        dim = int(rng.integers(2, 4))
        frame = build_frame(gen_schmidt_decomposable([dim] * 3, dim, state_seed), tols)
        basis = frame.full_basis(1)
        weights = _outcome_weights(op_seed, outcomes, dim)
        ops = measurement_set([basis @ np.diag(w) @ basis.conj().T for w in weights], party=1)
    else:
        dims = [int(d) for d in rng.integers(2, 4, size=3)]
        frame = build_frame(gen_random_state(dims, state_seed), tols)
        if kind == "scalar":
            weights = _outcome_weights(op_seed, outcomes, 1)[:, 0]
            ops = measurement_set([w * np.eye(dims[1]) for w in weights], party=1)
        else:
            ops = gen_measurement_set(dims[1], outcomes, op_seed, party=1)

    result = construct_simulating_measurement(frame, ops, tols)
    oracle = least_squares_partner(frame, ops)
    checks = verify_measure_sim(frame, ops, result, tols)

    agreement = 0.0
    for j, scale in enumerate(result.scales):
        if scale > 0.0:
            agreement = max(agreement, float(np.abs(result.frame_blocks[j] / scale - oracle[j]).max()))
    aligned = max((c.aligned_distance for c in checks if not c.skipped), default=0.0)
    feasible = sum(r < tols.decision for r in result.feasibility_residuals)
    metrics = {
        "min_feasibility_residual": min(result.feasibility_residuals),
        "max_feasibility_residual": max(result.feasibility_residuals),
        "feasible_outcomes": float(feasible),
        "oracle_agreement": agreement,
        "aligned_distance": aligned,
    }
    if kind == "generic":
        passed = agreement < 1e-7 and metrics["min_feasibility_residual"] > 1e-2
    else:
        metrics["completeness_residual"] = result.completeness_residual
        passed = (
            agreement < 1e-7
            and feasible == len(ops)
            and not any(c.skipped for c in checks)
            and aligned < 1e-8
            and result.completeness_residual < tols.completeness
        )
    return InstanceResult(seed, passed, metrics)


SUITES: dict[str, Callable[[int, Tolerances], InstanceResult]] = {
    "schmidt": _schmidt_round_trip,
    "unitary-positive": _unitary_positive,
    "unitary-negative": _unitary_negative,
    "frame": _frame_flattenings,
    "protocol": _protocol,
    "measure-sim": _measure_sim,
}


def run_batch(
    suite: str,
    count: int,
    base_seed: int = 0,
    tols: Tolerances = DEFAULT_TOLERANCES,
    workers: int = 1,
) -> BatchSummary:
    if suite not in SUITES:
        raise InputError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if count < 1:
        raise InputError(f"count must be positive, got {count}")
    run = SUITES[suite]
    seeds = [base_seed + i for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = tuple(pool.map(lambda s: run(s, tols), seeds))
    summary = BatchSummary(suite, base_seed, results)
    logger.info("suite %s: %d/%d passed", suite, summary.passed, count)
    return summary
