from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locsim.errors import DimensionMismatch, UnsortedInput
from locsim.generators import gen_random_state, gen_random_unitary, gen_schmidt_decomposable
from locsim.protocol_sim import all_cuts, compare_branches, measurement_set
from locsim.schmidt import check_schmidt_decomposable, degeneracy_blocks, reconstruct, schmidt_decompose
from locsim.states import basis_state, ghz_state
from locsim.tensor import (
    Bipartition,
    apply_local,
    local_operator,
    make_state,
    orthonormality_residual,
    phase_invariant_distance,
)


def test_bell_coefficients(bell):
    sd = schmidt_decompose(bell, Bipartition.of([0], 2))
    np.testing.assert_allclose(sd.coeffs, [1 / np.sqrt(2)] * 2, atol=1e-12)


def test_skewed_coefficients(skewed):
    sd = schmidt_decompose(skewed, Bipartition.of([0], 2))
    np.testing.assert_allclose(sd.coeffs, [0.89443, 0.44721], atol=1e-5)


def test_product_has_rank_one():
    sd = schmidt_decompose(basis_state([2, 2], [0, 1]), Bipartition.of([0], 2))
    assert sd.rank == 1
    assert sd.coeffs[0] == pytest.approx(1.0)


def test_decomposition_invariants():
    state = gen_random_state([3, 2, 2], seed=8)
    sd = schmidt_decompose(state, Bipartition.of([1, 2], 3))
    assert np.all(np.diff(sd.coeffs) <= 0)
    assert np.sum(sd.spectrum) == pytest.approx(1.0)
    np.testing.assert_allclose(sd.left_basis.conj().T @ sd.left_basis, np.eye(sd.rank), atol=1e-12)
    np.testing.assert_allclose(sd.right_basis.conj().T @ sd.right_basis, np.eye(sd.rank), atol=1e-12)
    # largest-magnitude entry of each left vector is real and positive
    for col in sd.left_basis.T:
        pivot = col[np.argmax(np.abs(col))]
        assert pivot.real > 0
        assert pivot.imag == pytest.approx(0.0, abs=1e-14)


def test_coefficients_match_reduced_spectrum():
    state = gen_random_state([2, 3, 2], seed=21)
    sd = schmidt_decompose(state, Bipartition.of([0], 3))
    m = state.tensor.reshape(2, -1)
    eig = np.sort(np.linalg.eigvalsh(m @ m.conj().T))[::-1]
    np.testing.assert_allclose(sd.spectrum, eig[: sd.rank], atol=1e-12)


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=25, deadline=None)
def test_round_trip_on_every_cut(seed):
    rng = np.random.default_rng(seed)
    dims = [int(d) for d in rng.integers(2, 5, size=int(rng.integers(2, 4)))]
    state = gen_random_state(dims, seed)
    for cut in all_cuts(len(dims)):
        back = reconstruct(schmidt_decompose(state, cut))
        assert phase_invariant_distance(back, state) < 1e-10


def test_reconstruct_product():
    state = basis_state([2, 2], [0, 1])
    back = reconstruct(schmidt_decompose(state, Bipartition.of([0], 2)))
    np.testing.assert_allclose(back.amps, state.amps, atol=1e-15)


@pytest.mark.parametrize(
    "coeffs, dim, sizes",
    [
        ([0.70711, 0.70711], 2, (2,)),
        ([0.89443, 0.44721], 2, (1, 1)),
        ([0.6, 0.6, 0.52915], 4, (2, 1, 1)),
        ([0.5, 0.5, 0.5, 0.5], 4, (4,)),
    ],
)
def test_degeneracy_blocks(coeffs, dim, sizes):
    blocks = degeneracy_blocks(coeffs, dim)
    assert blocks.block_sizes == sizes
    assert blocks.dim == dim


def test_degeneracy_blocks_trailing_zero_block():
    blocks = degeneracy_blocks([0.6, 0.6, 0.52915], 4)
    assert blocks.block_values[-1] == 0.0
    assert blocks.labels().tolist() == [0, 0, 1, 2]


def test_degeneracy_blocks_errors():
    with pytest.raises(UnsortedInput):
        degeneracy_blocks([0.4, 0.9], 2)
    with pytest.raises(DimensionMismatch):
        degeneracy_blocks([0.6, 0.6, 0.5], 2)


def test_ghz_is_decomposable(ghz):
    result = check_schmidt_decomposable(ghz)
    assert result.feasible
    np.testing.assert_allclose(result.coeffs, [1 / np.sqrt(2)] * 2, atol=1e-10)
    assert phase_invariant_distance(result.reconstruct(), ghz) < 1e-12


def test_w_is_not_decomposable(w):
    result = check_schmidt_decomposable(w)
    assert not result.feasible
    assert result.reason == "entangled_cofactor"
    assert result.witness == pytest.approx(1 / np.sqrt(2), abs=1e-6)


def test_product_is_decomposable_with_rank_one():
    result = check_schmidt_decomposable(basis_state([2, 2, 2], [0, 0, 0]))
    assert result.feasible
    assert result.rank == 1


def test_bipartite_states_are_always_decomposable():
    result = check_schmidt_decomposable(gen_random_state([3, 4], seed=4))
    assert result.feasible
    assert result.rank == 3


def test_locally_rotated_ghz_with_degenerate_spectrum():
    rng = np.random.default_rng(17)
    state = ghz_state(3)
    for party in range(3):
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        state, _ = apply_local(state, local_operator(q, party))
    result = check_schmidt_decomposable(state)
    assert result.feasible
    assert phase_invariant_distance(result.reconstruct(), state) < 1e-10


def test_non_orthogonal_factors_are_rejected():
    # |0>|0>|0> + |1>|+>|1>: every cofactor is a product, but party 1's factors overlap
    plus = np.array([1, 1]) / np.sqrt(2)
    e0, e1 = np.array([1, 0]), np.array([0, 1])
    amps = np.kron(np.kron(e0, e0), e0) + np.kron(np.kron(e1, plus), e1)
    state = make_state([2, 2, 2], amps, renormalize=True)
    result = check_schmidt_decomposable(state)
    assert not result.feasible
    assert result.reason == "non_orthogonal_factors"


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=25, deadline=None)
def test_generated_decomposable_states_pass(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 5))
    dims = [int(d) for d in rng.integers(2, 4, size=n)]
    rank = int(rng.integers(1, min(dims) + 1))
    result = check_schmidt_decomposable(gen_schmidt_decomposable(dims, rank, seed))
    assert result.feasible
    assert result.rank == rank


def _noisy(state, size, seed):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(state.amps.size) + 1j * rng.standard_normal(state.amps.size)
    return make_state(state.party_dims, state.amps + size * noise / np.linalg.norm(noise), renormalize=True)


def test_slightly_noisy_decomposable_state_gives_orthonormal_frames(plus_minus):
    state = _noisy(gen_schmidt_decomposable([2, 2, 2], 2, seed=3, coeffs=[0.8, 0.6]), 3e-9, seed=0)
    result = check_schmidt_decomposable(state)
    assert result.feasible
    for basis in result.per_party_bases:
        assert orthonormality_residual(basis) < 1e-12
    for party in range(3):
        np.testing.assert_allclose(result.frame(party).conj().T @ result.frame(party), np.eye(2), atol=1e-12)
    assert np.sum(result.coeffs**2) == pytest.approx(1.0, abs=1e-12)
    assert phase_invariant_distance(result.reconstruct(), state) < 1e-8
    report = compare_branches(result, measurement_set(plus_minus, 1), 1, 0)
    assert report.completeness_residual < 1e-9


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=25, deadline=None)
def test_accepted_factors_are_orthonormal_to_working_precision(seed):
    rng = np.random.default_rng(seed)
    # party 0 is the smallest so the noise cannot raise the rank
    dims = sorted(int(d) for d in rng.integers(2, 4, size=3))
    state = _noisy(gen_schmidt_decomposable(dims, dims[0], seed), 3e-10, seed)
    result = check_schmidt_decomposable(state)
    assert result.feasible
    assert max(orthonormality_residual(b) for b in result.per_party_bases) < 1e-12
    assert phase_invariant_distance(result.reconstruct(), state) < 1e-8


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=25, deadline=None)
def test_coefficients_survive_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    dims = [int(d) for d in rng.integers(2, 4, size=3)]
    state = gen_random_state(dims, seed)
    rotated = state
    for party, dim in enumerate(dims):
        rotated, _ = apply_local(rotated, gen_random_unitary(dim, seed + party + 1, party))
    for cut in all_cuts(3):
        before = schmidt_decompose(state, cut).coeffs
        after = schmidt_decompose(rotated, cut).coeffs
        np.testing.assert_allclose(after, before, atol=1e-9)


def test_reconstruction_is_read_only(ghz):
    result = check_schmidt_decomposable(ghz)
    with pytest.raises(ValueError):
        result.reconstruct().amps[0] = 0
