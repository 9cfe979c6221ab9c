"""Statevector helpers for a single qudit or a small qubit register.

States are plain complex numpy vectors. Qubit registers are big-endian:
qubit 0 is the most significant bit of the basis index.
"""
import numpy as np

from .errors import ContractError, DimensionError, ShapeError, WiringError

NORM_TOL = 1e-10
MAX_QUBITS = 8


def ground_state(dim):
    """``|0>`` in a ``dim``-level system."""
    if dim < 2:
        raise DimensionError(f"dimension must be >= 2, got {dim}")
    psi = np.zeros(dim, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def apply_unitary(state, U):
    state = np.asarray(state, dtype=np.complex128)
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != (state.shape[0], state.shape[0]):
        raise ShapeError(f"unitary of shape {U.shape} cannot act on a state of length {state.shape[0]}")
    return U @ state


def measurement_probabilities(state):
    """Computational-basis outcome probabilities ``|c_k|^2``."""
    state = np.asarray(state, dtype=np.complex128)
    probs = state.real**2 + state.imag**2
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ContractError(f"state is not normalised (sum of probabilities {total!r})")
    return probs


def expectation_value(state, observable):
    """``<psi|O|psi>`` for Hermitian ``O``; the imaginary residual is checked then dropped."""
    state = np.asarray(state, dtype=np.complex128)
    observable = np.asarray(observable, dtype=np.complex128)
    if observable.shape != (state.shape[0], state.shape[0]):
        raise ShapeError(f"observable of shape {observable.shape} does not match state length {state.shape[0]}")
    val = np.vdot(state, observable @ state)
    if abs(val.imag) >= 1e-8:
        raise ContractError(f"expectation value has imaginary part {val.imag:.3e}; observable not Hermitian?")
    return float(val.real)


def _check_register(q):
    if not 1 <= q <= MAX_QUBITS:
        raise DimensionError(f"register size must be in 1..{MAX_QUBITS}, got {q}")


def embed_single_qubit_gate(U2, target, q):
    """``I x ... x U2 x ... x I`` on ``q`` qubits with ``U2`` on qubit ``target``."""
    _check_register(q)
    U2 = np.asarray(U2, dtype=np.complex128)
    if U2.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 gate, got shape {U2.shape}")
    if not 0 <= target < q:
        raise IndexError(f"target qubit {target} out of range for {q} qubits")
    left = np.eye(2**target, dtype=np.complex128)
    right = np.eye(2 ** (q - target - 1), dtype=np.complex128)
    return np.kron(np.kron(left, U2), right)


def cnot_gate(control, target, q):
    """CNOT on a ``q``-qubit register as a ``2**q`` permutation matrix."""
    _check_register(q)
    if control == target:
        raise WiringError("control and target must differ")
    for name, idx in (("control", control), ("target", target)):
        if not 0 <= idx < q:
            raise IndexError(f"{name} qubit {idx} out of range for {q} qubits")
    dim = 2**q
    cbit = 1 << (q - 1 - control)
    tbit = 1 << (q - 1 - target)
    U = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(dim):
        U[k ^ tbit if k & cbit else k, k] = 1.0
    return U


def cnot_cascade(q):
    """CNOTs ``0->1, 1->2, ..., (q-2)->(q-1)`` applied in that order."""
    U = np.eye(2**q, dtype=np.complex128)
    for c in range(q - 1):
        U = cnot_gate(c, c + 1, q) @ U
    return U
