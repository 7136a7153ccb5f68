from __future__ import annotations

from typing import Sequence

import numpy as np

from locsim.errors import InputError
from locsim.tensor import StateVector, make_state

NAMED_STATES = ("bell", "ghz", "w", "zero")


def basis_state(party_dims: Sequence[int], digits: Sequence[int]) -> StateVector:
    """|digits> over `party_dims`, e.g. basis_state([2, 2], [0, 1]) is |01>."""
    tensor = np.zeros(tuple(party_dims), dtype=np.complex128)
    tensor[tuple(digits)] = 1.0
    return make_state(party_dims, tensor.reshape(-1))


def bell_state() -> StateVector:
    """(|00> + |11>)/sqrt2"""
    return ghz_state(2)


def ghz_state(n_parties: int = 3, local_dim: int = 2) -> StateVector:
    """sum_k |k...k> / sqrt(d)"""
    tensor = np.zeros((local_dim,) * n_parties, dtype=np.complex128)
    for k in range(local_dim):
        tensor[(k,) * n_parties] = 1.0
    return make_state([local_dim] * n_parties, tensor.reshape(-1), renormalize=True)


def w_state(n_parties: int = 3) -> StateVector:
    """One excitation spread evenly: (|0..01> + |0..10> + ... + |10..0>)/sqrtn"""
    tensor = np.zeros((2,) * n_parties, dtype=np.complex128)
    for p in range(n_parties):
        digits = [0] * n_parties
        digits[p] = 1
        tensor[tuple(digits)] = 1.0
    return make_state([2] * n_parties, tensor.reshape(-1), renormalize=True)


def schmidt_form_state(coeffs: Sequence[float], n_parties: int = 2, local_dim: int | None = None) -> StateVector:
    """sum_l c_l |l...l>; with two parties this is a state written directly in Schmidt form."""
    dim = local_dim or len(coeffs)
    tensor = np.zeros((dim,) * n_parties, dtype=np.complex128)
    for k, c in enumerate(coeffs):
        tensor[(k,) * n_parties] = c
    return make_state([dim] * n_parties, tensor.reshape(-1), renormalize=True)


def named_state(name: str, n_parties: int = 3) -> StateVector:
    name = name.lower()
    if name == "bell":
        return bell_state()
    if name == "ghz":
        return ghz_state(n_parties)
    if name == "w":
        return w_state(n_parties)
    if name == "zero":
        return basis_state([2] * n_parties, [0] * n_parties)
    raise InputError(f"unknown named state {name!r}; choose from {', '.join(NAMED_STATES)}")
