import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellforge.quantum import (
    CorrelationTensor,
    QuantumState,
    add_white_noise,
    apply_local_unitary,
    bloch_rotation,
    correlation_function,
    correlation_tensor,
    pauli_matrix,
    rotate_block,
    state_from_amplitudes,
    state_from_matrix,
)

from .conftest import random_pure_state

EPR = (0, 1, 1, 0)  # (|01> + |10>) / sqrt(2)


def trace_oracle(state, idx):
    op = np.array([[1.0]])
    for k in idx:
        op = np.kron(op, pauli_matrix(k))
    return float(np.real(np.trace(state.rho @ op)))


def test_pauli_matrices():
    assert np.array_equal(pauli_matrix(0), np.eye(2))
    assert np.array_equal(pauli_matrix(3), np.diag([1, -1]))
    for k in range(4):
        assert np.allclose(pauli_matrix(k) @ pauli_matrix(k), np.eye(2))
    with pytest.raises(ValueError):
        pauli_matrix(4)


def test_state_constructors():
    s = state_from_amplitudes(1, [1, 0])
    assert np.allclose(s.rho, np.diag([1, 0]))
    a = state_from_amplitudes(2, [2, 0, 0, 2])
    b = state_from_amplitudes(2, np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert np.allclose(a.rho, b.rho)
    assert state_from_amplitudes(2, EPR).purity() == pytest.approx(1)
    assert state_from_matrix(np.eye(4) / 4).n_parties == 2


@pytest.mark.parametrize(
    "rho",
    [
        np.array([[1, 1], [0, 0]], dtype=complex),  # not Hermitian
        np.diag([0.7, 0.7]).astype(complex),  # trace 1.4
        np.diag([1.5, -0.5]).astype(complex),  # negative eigenvalue
    ],
)
def test_invalid_density_matrices(rho):
    with pytest.raises(ValueError):
        QuantumState(1, rho)


def test_invalid_amplitudes():
    with pytest.raises(ValueError):
        state_from_amplitudes(2, [0, 0, 0, 0])
    with pytest.raises(ValueError):
        state_from_amplitudes(2, [1, 0, 0])


def test_epr_tensor():
    t = correlation_tensor(state_from_amplitudes(2, EPR))
    assert np.allclose(t.full, np.diag([1, 1, -1]), atol=1e-15)
    assert t[0, 0] == pytest.approx(1)


def test_ghz_tensor_components():
    amps = np.zeros(8)
    amps[0] = amps[7] = 1
    t = correlation_tensor(state_from_amplitudes(3, amps))
    assert t[1, 1, 1] == pytest.approx(1)
    for idx in [(1, 2, 2), (2, 1, 2), (2, 2, 1)]:
        assert t[idx] == pytest.approx(-1)
    assert abs(t[3, 3, 3]) < 1e-15


def test_tensor_matches_trace_oracle(rng):
    for n in (1, 2, 3):
        state = add_white_noise(random_pure_state(n, rng), 0.8)
        t = correlation_tensor(state)
        for idx in itertools.product(range(4), repeat=n):
            assert t[idx] == pytest.approx(trace_oracle(state, idx), abs=1e-12)


def test_party_order_most_significant_first():
    # |01>: party 1 in |0> (z = +1), party 2 in |1> (z = -1)
    t = correlation_tensor(state_from_amplitudes(2, [0, 1, 0, 0]))
    assert t[3, 0] == pytest.approx(1)
    assert t[0, 3] == pytest.approx(-1)


def test_nonzero_listing():
    t = correlation_tensor(state_from_amplitudes(2, EPR))
    listed = dict(t.nonzero())
    assert listed == pytest.approx({(0, 0): 1, (1, 1): 1, (2, 2): 1, (3, 3): -1})


def test_correlation_function():
    t = correlation_tensor(state_from_amplitudes(2, EPR))
    z, x = np.eye(3)[2], np.eye(3)[0]
    assert correlation_function(t, [z, z]) == pytest.approx(-1)
    prod = correlation_tensor(state_from_amplitudes(2, [1, 0, 0, 0]))
    assert correlation_function(prod, [x, z]) == pytest.approx(0)
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    b = [np.array([s, 0, c]), np.array([-s, 0, c])]
    for a in (x, z):
        for bb in b:
            assert abs(correlation_function(t, [a, bb])) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(ValueError):
        correlation_function(t, [x])
    with pytest.raises(ValueError):
        correlation_function(t, [x, 2 * z])


def test_white_noise():
    epr = state_from_amplitudes(2, EPR)
    assert np.allclose(add_white_noise(epr, 1).rho, epr.rho)
    flat = correlation_tensor(add_white_noise(epr, 0)).components
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    assert np.allclose(flat, expected)
    assert correlation_tensor(add_white_noise(epr, 0.5))[1, 1] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        add_white_noise(epr, 1.1)


def test_tensor_entries_bounded(rng):
    for n in (2, 3, 4):
        t = correlation_tensor(random_pure_state(n, rng))
        assert np.abs(t.full).max() <= 1 + 1e-12


def test_components_shape_checked():
    with pytest.raises(ValueError):
        CorrelationTensor(2, np.zeros((4, 4, 4)))


def test_local_unitary_rotates_tensor(rng):
    state = random_pure_state(3, rng)
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    rotated = correlation_tensor(apply_local_unitary(state, q, 1)).full
    r = bloch_rotation(q)
    assert np.allclose(r @ r.T, np.eye(3))
    assert np.linalg.det(r) == pytest.approx(1)
    expected = rotate_block(correlation_tensor(state).full, [np.eye(3), r, np.eye(3)])
    assert np.allclose(rotated, expected, atol=1e-12)


amplitude = st.floats(-1, 1, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(amplitude, amplitude), min_size=8, max_size=8), st.floats(0, 1))
def test_purity_and_noise_properties(pairs, v):
    amps = np.array([complex(a, b) for a, b in pairs])
    if np.linalg.norm(amps) < 1e-3:
        return
    state = state_from_amplitudes(3, amps)
    t = correlation_tensor(state)
    assert np.sum(t.components**2) / 8 == pytest.approx(state.purity(), abs=1e-12)
    noisy = correlation_tensor(add_white_noise(state, v))
    mask = np.ones((4, 4, 4), bool)
    mask[0, 0, 0] = False
    assert np.allclose(noisy.components[mask], v * t.components[mask], atol=1e-12)
