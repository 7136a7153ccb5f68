from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locsim.errors import IncompleteSource, NotTripartite, SingularSupport, ZeroProbabilityBranch
from locsim.frame import (
    build_frame,
    construct_simulating_measurement,
    flattening,
    least_squares_partner,
    normalization_constants,
    partial_transpose_ab,
    permute_frame,
    reconstruct_frame,
    row_space_projector,
    swap_flatten,
    verify_frame,
    verify_measure_sim,
)
from locsim.generators import gen_measurement_set, gen_random_state, gen_schmidt_decomposable
from locsim.protocol_sim import measure_branch, measurement_set
from locsim.schmidt import check_schmidt_decomposable
from locsim.states import basis_state
from locsim.tensor import local_operator, permute_parties, phase_invariant_distance
from locsim.tolerances import DEFAULT_TOLERANCES

SEEDS = st.integers(min_value=0, max_value=2**32)


def _random_frame(seed):
    rng = np.random.default_rng(seed)
    dims = [int(d) for d in rng.integers(2, 4, size=3)]
    return build_frame(gen_random_state(dims, seed))


def test_ghz_frame(ghz):
    frame = build_frame(ghz)
    assert frame.ranks == (2, 2, 2)
    for spectrum in frame.spectra:
        np.testing.assert_allclose(spectrum, [0.5, 0.5], atol=1e-12)
    assert np.sum(np.abs(frame.coeff_tensor) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert verify_frame(frame).max < 1e-12


def test_product_frame():
    frame = build_frame(basis_state([2, 2, 2], [0, 0, 0]))
    assert frame.ranks == (1, 1, 1)
    assert abs(frame.coeff_tensor[0, 0, 0]) == pytest.approx(1.0)


def test_w_frame(w):
    frame = build_frame(w)
    assert frame.ranks == (2, 2, 2)
    for spectrum in frame.spectra:
        np.testing.assert_allclose(spectrum, [2 / 3, 1 / 3], atol=1e-12)
    check = verify_frame(frame)
    assert check.max < 1e-10
    a = flattening(frame, 0)
    np.testing.assert_allclose(a @ a.conj().T, np.diag([2 / 3, 1 / 3]), atol=1e-10)


def test_frame_needs_three_parties(bell):
    with pytest.raises(NotTripartite):
        build_frame(bell)


def test_reconstruct_frame_matches_state():
    state = gen_random_state([2, 3, 3], seed=7)
    frame = build_frame(state)
    assert phase_invariant_distance(reconstruct_frame(frame), state) < 1e-9
    with pytest.raises(ValueError):
        reconstruct_frame(frame).amps[0] = 0


@given(SEEDS)
@settings(max_examples=25, deadline=None)
def test_every_flattening_is_diagonal(seed):
    frame = _random_frame(seed)
    assert verify_frame(frame).max < 1e-9
    assert np.sum(np.abs(frame.coeff_tensor) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_swap_flatten_is_b_flattening():
    frame = build_frame(gen_random_state([2, 3, 2], seed=9))
    b = swap_flatten(frame)
    np.testing.assert_allclose(b, flattening(frame, 1))
    np.testing.assert_allclose(b @ b.conj().T, np.diag(frame.spectra[1]), atol=1e-9)


def test_swap_flatten_twice_restores_a_flattening():
    frame = build_frame(gen_random_state([3, 2, 2], seed=10))
    r_a, r_b, r_c = frame.ranks
    back = partial_transpose_ab(swap_flatten(frame), (r_b, r_a, r_c))
    np.testing.assert_array_equal(back, flattening(frame, 0))


def test_permute_frame_matches_permuted_state():
    state = gen_random_state([2, 3, 2], seed=11)
    frame = permute_frame(build_frame(state), [1, 2, 0])
    assert frame.party_dims == (3, 2, 2)
    assert phase_invariant_distance(reconstruct_frame(frame), permute_parties(state, [1, 2, 0])) < 1e-9


def test_normalization_constants_examples(ghz, computational):
    frame = build_frame(ghz)
    h = normalization_constants(frame, computational, side=1)
    np.testing.assert_allclose(h, [np.sqrt(2), np.sqrt(2)], atol=1e-12)
    assert normalization_constants(frame, [np.eye(2)], side=2) == pytest.approx([1.0])


def test_normalization_constants_match_branch_probability():
    state = gen_random_state([2, 3, 2], seed=12)
    frame = build_frame(state)
    ops = gen_measurement_set(3, 3, seed=13, party=1)
    constants = normalization_constants(frame, ops, side=1)
    for op, constant in zip(ops.operators, constants):
        branch = measure_branch(state, op)
        assert constant == pytest.approx(1 / np.sqrt(branch.probability), rel=1e-10)


def test_normalization_constants_zero_branch(computational):
    frame = build_frame(basis_state([2, 2, 2], [0, 0, 0]))
    with pytest.raises(ZeroProbabilityBranch):
        normalization_constants(frame, computational, side=1)


def test_ghz_computational_measurement_is_simulated(ghz, computational):
    frame = build_frame(ghz)
    ops = measurement_set(computational, party=1)
    result = construct_simulating_measurement(frame, ops)
    assert max(result.feasibility_residuals) < 1e-10
    assert result.completeness_residual < 1e-10
    np.testing.assert_allclose(result.h_constants, [np.sqrt(2)] * 2, atol=1e-12)
    np.testing.assert_allclose(result.f_constants, result.h_constants, atol=1e-10)
    for got, want in zip(result.target_ops.operators, computational):
        assert got.party == 0
        np.testing.assert_allclose(got.matrix, want, atol=1e-10)

    checks = verify_measure_sim(frame, ops, result)
    for check in checks:
        assert not check.skipped
        assert check.aligned_distance < 1e-12
        assert check.raw_distance < 1e-12


def test_trivial_measurement_gives_identity():
    frame = build_frame(gen_random_state([2, 2, 3], seed=14))
    result = construct_simulating_measurement(frame, measurement_set([np.eye(2)], party=1))
    assert result.feasibility_residuals[0] < 1e-10
    np.testing.assert_allclose(result.target_ops.operators[0].matrix, np.eye(2), atol=1e-10)


def test_product_state_plus_minus_is_infeasible(plus_minus):
    frame = build_frame(basis_state([2, 2, 2], [0, 0, 0]))
    ops = measurement_set(plus_minus, party=1)
    result = construct_simulating_measurement(frame, ops)
    for residual in result.feasibility_residuals:
        assert residual > 0.1
    assert not result.feasible()
    checks = verify_measure_sim(frame, ops, result)
    assert all(check.skipped for check in checks)


def test_frame_diagonal_measurement_on_decomposable_state():
    state = gen_schmidt_decomposable([2, 2, 2], 2, seed=15, coeffs=[0.8, 0.6])
    msd = check_schmidt_decomposable(state)
    t, s = 0.4, 1.1
    diagonals = [np.array([np.cos(t), np.sin(s)]), np.array([np.sin(t), np.cos(s)])]
    frame_b, frame_a = msd.frame(1), msd.frame(0)
    ops = measurement_set([frame_b @ np.diag(d) @ frame_b.conj().T for d in diagonals], party=1)

    result = construct_simulating_measurement(build_frame(state), ops)
    assert max(result.feasibility_residuals) < 1e-8
    assert result.completeness_residual < 1e-8
    for got, d in zip(result.target_ops.operators, diagonals):
        np.testing.assert_allclose(got.matrix, frame_a @ np.diag(d) @ frame_a.conj().T, atol=1e-8)


def test_other_source_and_target(ghz, computational):
    frame = build_frame(ghz)
    ops = measurement_set(computational, party=2)
    result = construct_simulating_measurement(frame, ops, source=2, target=1)
    assert result.target_ops.party == 1
    assert max(result.feasibility_residuals) < 1e-10
    for check in verify_measure_sim(frame, ops, result):
        assert check.raw_distance < 1e-12


def test_incomplete_source_is_rejected(ghz, computational):
    with pytest.raises(IncompleteSource):
        construct_simulating_measurement(build_frame(ghz), measurement_set(computational[:1], party=1))


def test_unsupported_rows_raise(w, computational):
    tols = replace(DEFAULT_TOLERANCES, support=0.5)
    with pytest.raises(SingularSupport):
        construct_simulating_measurement(build_frame(w), measurement_set(computational, party=1), tols)


@given(SEEDS)
@settings(max_examples=20, deadline=None)
def test_closed_form_matches_least_squares(seed):
    frame = _random_frame(seed)
    ops = gen_measurement_set(frame.party_dims[1], 2, seed + 1, party=1)
    result = construct_simulating_measurement(frame, ops)
    oracle = least_squares_partner(frame, ops)
    for block, scale, solution in zip(result.frame_blocks, result.scales, oracle):
        np.testing.assert_allclose(block / scale, solution, atol=1e-7)


@given(SEEDS)
@settings(max_examples=20, deadline=None)
def test_scalar_measurements_are_simulated_on_any_frame(seed):
    frame = _random_frame(seed)
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.1, 1.0, size=3)
    weights = np.sqrt(weights / weights.sum())
    d_b = frame.party_dims[1]
    ops = measurement_set([w * np.eye(d_b) for w in weights], party=1)
    result = construct_simulating_measurement(frame, ops)
    assert max(result.feasibility_residuals) < 1e-8
    for check in verify_measure_sim(frame, ops, result):
        assert check.aligned_distance < 1e-8
        assert check.raw_distance < 1e-8


@given(SEEDS)
@settings(max_examples=20, deadline=None)
def test_row_space_projector(seed):
    check = row_space_projector(_random_frame(seed))
    assert check.idempotence_residual < 1e-9
    assert check.hermiticity_residual < 1e-9


def test_f_constants_are_target_branch_normalizers():
    state = gen_random_state([2, 2, 2], seed=16)
    frame = build_frame(state)
    ops = gen_measurement_set(2, 2, seed=17, party=1)
    result = construct_simulating_measurement(frame, ops)
    for op, f in zip(result.target_ops.operators, result.f_constants):
        branch = measure_branch(state, local_operator(op.matrix), party=0)
        assert f == pytest.approx(1 / np.sqrt(branch.probability), rel=1e-8)
