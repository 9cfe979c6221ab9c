import numpy as np
import pytest

from quditvqc.algebra import exp_minus_i
from quditvqc.errors import ContractError, DimensionError, ShapeError, WiringError
from quditvqc.simulator import (
    apply_unitary,
    cnot_cascade,
    cnot_gate,
    embed_single_qubit_gate,
    expectation_value,
    ground_state,
    measurement_probabilities,
)

from conftest import random_hermitian, random_state, random_unitary

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def basis_state(index, dim):
    e = np.zeros(dim, dtype=complex)
    e[index] = 1
    return e


def test_ground_state():
    psi = ground_state(9)
    assert psi.shape == (9,) and psi[0] == 1 and np.count_nonzero(psi) == 1
    assert np.array_equal(ground_state(2), [1, 0])
    assert np.linalg.norm(psi) == 1.0
    with pytest.raises(DimensionError):
        ground_state(1)


def test_apply_unitary(rng):
    psi = random_state(rng, 9)
    assert np.array_equal(apply_unitary(psi, np.eye(9)), psi)
    out = apply_unitary(ground_state(2), exp_minus_i(np.pi / 2 * SX))
    assert np.allclose(out, [0, -1j], atol=1e-15)
    assert abs(np.linalg.norm(apply_unitary(psi, random_unitary(rng, 9))) - 1) < 1e-10
    with pytest.raises(ShapeError):
        apply_unitary(psi, np.eye(3))


def test_norm_preserved_over_many_gates(rng):
    psi = random_state(rng, 9)
    for _ in range(100):
        psi = apply_unitary(psi, exp_minus_i(random_hermitian(rng, 9)))
    assert abs(np.linalg.norm(psi) - 1) < 1e-9


def test_measurement_probabilities(rng):
    assert np.array_equal(measurement_probabilities(ground_state(9)), np.eye(9)[0])
    assert np.allclose(measurement_probabilities(np.full(9, 1 / 3)), 1 / 9)
    assert abs(measurement_probabilities(random_state(rng, 9)).sum() - 1) < 1e-9
    with pytest.raises(ContractError):
        measurement_probabilities(np.ones(3))


def test_phase_invariance(rng):
    psi = random_state(rng, 9)
    phases = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 9)))
    assert np.allclose(measurement_probabilities(apply_unitary(psi, phases)), measurement_probabilities(psi))


def test_expectation_value(rng):
    lam = rng.normal(size=9)
    assert expectation_value(ground_state(9), np.diag(lam)) == pytest.approx(lam[0])
    assert expectation_value(np.array([0, 1]), SZ) == -1.0
    psi = random_state(rng, 9)
    O = random_hermitian(rng, 9)
    brute = sum(np.conj(psi[a]) * O[a, b] * psi[b] for a in range(9) for b in range(9))
    assert expectation_value(psi, O) == pytest.approx(brute.real, abs=1e-12)
    with pytest.raises(ContractError):
        expectation_value(psi, O + 1j * np.eye(9))


def test_embed_single_qubit_gate(rng):
    assert np.array_equal(embed_single_qubit_gate(np.eye(2), 2, 4), np.eye(16))
    out = embed_single_qubit_gate(SX, 1, 2) @ basis_state(0b00, 4)
    assert np.array_equal(out, basis_state(0b01, 4))
    U = embed_single_qubit_gate(random_unitary(rng, 2), 0, 3)
    assert np.max(np.abs(U @ U.conj().T - np.eye(8))) < 1e-10
    with pytest.raises(IndexError):
        embed_single_qubit_gate(SX, 2, 2)


def test_cnot():
    C = cnot_gate(0, 1, 2)
    assert np.array_equal(C @ basis_state(0b10, 4), basis_state(0b11, 4))
    assert np.array_equal(C @ basis_state(0b00, 4), basis_state(0b00, 4))
    assert np.array_equal(C @ C, np.eye(4))
    assert set(np.unique(C)) <= {0, 1}
    with pytest.raises(WiringError):
        cnot_gate(1, 1, 2)


def test_cnot_cascade():
    C = cnot_cascade(4)
    assert np.array_equal(C @ basis_state(0, 16), basis_state(0, 16))
    assert np.allclose(C @ C.conj().T, np.eye(16))
    # |1000> propagates down the chain to |1111>
    assert np.array_equal(C @ basis_state(0b1000, 16), basis_state(0b1111, 16))
