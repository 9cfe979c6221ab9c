"""Hot numeric kernels shared by every circuit model.

Each kernel exists twice: a numba version that loops over the batch and a
vectorised numpy version. Both paths take eigendecompositions from numpy's
batched ``eigh``. ``expm_batch``, ``divided_differences`` and
``adjoint_contract`` dispatch on :data:`quditvqc._accel.USE_NUMBA`.

Conventions: ``H`` stacks are ``(B, n, n)`` Hermitian, eigenvalues ``w`` are
``(B, n)`` ascending, eigenvectors ``V`` are column-stacked so that
``H = V diag(w) V^dagger``.
"""
import numpy as np

from . import _accel
from ._accel import njit


# -- numpy path --------------------------------------------------------------

def _expm_batch_np(H):
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(-1j * w)[:, None, :]) @ np.conj(np.swapaxes(V, 1, 2))
    return w, V, U


def _divided_differences_np(w):
    mid = 0.5 * (w[:, :, None] + w[:, None, :])
    half = 0.5 * (w[:, :, None] - w[:, None, :])
    return -1j * np.exp(-1j * mid) * np.sinc(half / np.pi)


def _adjoint_contract_np(w, V, adj, psi):
    F = _divided_differences_np(w)
    Vh = np.conj(np.swapaxes(V, 1, 2))
    adj_eig = np.einsum("bij,bj->bi", Vh, adj)
    psi_eig = np.einsum("bij,bj->bi", Vh, psi)
    M = np.conj(adj_eig)[:, :, None] * F * psi_eig[:, None, :]
    return np.conj(V) @ M @ np.swapaxes(V, 1, 2)


# -- numba path --------------------------------------------------------------

@njit
def _sinc(h):
    if abs(h) < 1e-8:
        return 1.0 - h * h / 6.0
    return np.sin(h) / h


@njit
def _expm_from_eig_nb(w, V):
    B, n = w.shape
    U = np.empty((B, n, n), dtype=np.complex128)
    phase = np.empty(n, dtype=np.complex128)
    for b in range(B):
        for k in range(n):
            phase[k] = np.exp(-1j * w[b, k])
        for i in range(n):
            for j in range(n):
                acc = 0j
                for k in range(n):
                    acc += V[b, i, k] * phase[k] * np.conj(V[b, j, k])
                U[b, i, j] = acc
    return U


@njit
def _divided_differences_nb(w):
    B, n = w.shape
    F = np.empty((B, n, n), dtype=np.complex128)
    for b in range(B):
        for i in range(n):
            for j in range(n):
                mid = 0.5 * (w[b, i] + w[b, j])
                half = 0.5 * (w[b, i] - w[b, j])
                F[b, i, j] = -1j * np.exp(-1j * mid) * _sinc(half)
    return F


@njit
def _adjoint_contract_nb(w, V, adj, psi):
    B, n = w.shape
    F = _divided_differences_nb(w)
    N = np.empty((B, n, n), dtype=np.complex128)
    adj_eig = np.empty(n, dtype=np.complex128)
    psi_eig = np.empty(n, dtype=np.complex128)
    M = np.empty((n, n), dtype=np.complex128)
    T = np.empty((n, n), dtype=np.complex128)
    for b in range(B):
        for a in range(n):
            sa = 0j
            sp = 0j
            for c in range(n):
                vc = np.conj(V[b, c, a])
                sa += vc * adj[b, c]
                sp += vc * psi[b, c]
            adj_eig[a] = sa
            psi_eig[a] = sp
        for a in range(n):
            for c in range(n):
                M[a, c] = np.conj(adj_eig[a]) * F[b, a, c] * psi_eig[c]
        # N = conj(V) M V^T
        for i in range(n):
            for c in range(n):
                acc = 0j
                for a in range(n):
                    acc += np.conj(V[b, i, a]) * M[a, c]
                T[i, c] = acc
        for i in range(n):
            for j in range(n):
                acc = 0j
                for c in range(n):
                    acc += T[i, c] * V[b, j, c]
                N[b, i, j] = acc
    return N


# -- dispatch ----------------------------------------------------------------

def expm_batch(H, use_numba=None):
    """Eigendecompose a stack of Hermitian matrices and return ``(w, V, exp(-iH))``."""
    H = np.ascontiguousarray(H, dtype=np.complex128)
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        # LAPACK's batched eigh beats a per-matrix loop, so both paths share it
        w, V = np.linalg.eigh(H)
        return w, V, _expm_from_eig_nb(w, V)
    return _expm_batch_np(H)


def divided_differences(w, use_numba=None):
    """First divided differences of ``exp(-i lambda)`` over each eigenvalue pair.

    ``F[a, b] = (exp(-i w_a) - exp(-i w_b)) / (w_a - w_b)`` with the diagonal
    limit ``-i exp(-i w_a)``. Evaluated as ``-i exp(-i mid) sinc(half gap)``,
    which has no cancellation for nearly degenerate pairs.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        return _divided_differences_nb(w)
    return _divided_differences_np(w)


def adjoint_contract(w, V, adj, psi, use_numba=None):
    """Matrix ``N`` such that ``Re sum(N * dH)`` is the directional derivative.

    For ``U = exp(-iH)`` and a scalar loss with ``dL = Re(adj^dagger dU psi)``,
    the derivative along a Hermitian direction ``dH`` equals
    ``Re(sum_cd N_cd dH_cd)``. Contracting ``N`` against a flattened generator
    table gives the gradient for every generator at once.
    """
    args = (
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(V, dtype=np.complex128),
        np.ascontiguousarray(adj, dtype=np.complex128),
        np.ascontiguousarray(psi, dtype=np.complex128),
    )
    if _accel.USE_NUMBA if use_numba is None else use_numba:
        return _adjoint_contract_nb(*args)
    return _adjoint_contract_np(*args)
