from __future__ import annotations

import numpy as np
import pytest

from locsim.states import bell_state, ghz_state, schmidt_form_state, w_state
from locsim.tolerances import DEFAULT_TOLERANCES

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


@pytest.fixture
def tols():
    return DEFAULT_TOLERANCES


@pytest.fixture
def bell():
    return bell_state()


@pytest.fixture
def ghz():
    return ghz_state(3)


@pytest.fixture
def w():
    return w_state(3)


@pytest.fixture
def skewed():
    """sqrt(0.8)|00> + sqrt(0.2)|11>"""
    return schmidt_form_state([np.sqrt(0.8), np.sqrt(0.2)])


@pytest.fixture
def plus_minus():
    return [np.outer(PLUS, PLUS.conj()), np.outer(MINUS, MINUS.conj())]


@pytest.fixture
def computational():
    return [np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)]
