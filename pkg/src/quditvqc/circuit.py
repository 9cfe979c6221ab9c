"""Batched data re-uploading circuit with exact adjoint gradients.

A layer ``l`` applies ``E @ exp(-i sum_j x_j phi[l, j] G_j)`` to the state,
where ``G`` is a stack of Hermitian generators and ``E`` an optional fixed
entangling unitary. Layer 0 acts first on ``|0>``.

The backward pass takes the adjoint vector ``c`` of a real loss, defined by
``dL = Re(c^dagger dpsi)`` for the output state ``psi``, and returns the
gradients with respect to ``phi`` and to the features ``x``.
"""
import numpy as np

from .errors import ShapeError
from .kernels import adjoint_contract, expm_batch


class ReuploadingCircuit:
    def __init__(self, generators, entangler=None):
        generators = np.ascontiguousarray(generators, dtype=np.complex128)
        if generators.ndim != 3 or generators.shape[1] != generators.shape[2]:
            raise ShapeError(f"generators must be a (P, n, n) stack, got {generators.shape}")
        self.generators = generators
        self.n_features, self.dim, _ = generators.shape
        self._flat = generators.reshape(self.n_features, -1)
        self._flat_t = np.ascontiguousarray(self._flat.T)
        self.entangler = None if entangler is None else np.asarray(entangler, dtype=np.complex128)

    def hamiltonians(self, X, phi_l):
        """Layer exponents ``sum_j X[b, j] phi_l[j] G_j`` for every sample, ``(B, n, n)``."""
        return ((X * phi_l) @ self._flat).reshape(X.shape[0], self.dim, self.dim)

    def _check(self, X, phi):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
        if X.shape[1] != self.n_features or phi.shape[1] != self.n_features:
            raise ShapeError(
                f"circuit takes {self.n_features} features per layer, got X {X.shape} and phi {phi.shape}"
            )
        return X, phi

    def forward(self, X, phi, keep_cache=False):
        """Output states ``(B, n)``; with ``keep_cache`` also the per-layer cache for :meth:`backward`."""
        X, phi = self._check(X, phi)
        psi = np.zeros((X.shape[0], self.dim), dtype=np.complex128)
        psi[:, 0] = 1.0
        cache = []
        for phi_l in phi:
            w, V, U = expm_batch(self.hamiltonians(X, phi_l))
            if keep_cache:
                cache.append((w, V, U, psi))
            psi = np.einsum("bij,bj->bi", U, psi)
            if self.entangler is not None:
                psi = psi @ self.entangler.T
        return (psi, cache) if keep_cache else psi

    def backward(self, X, phi, cache, adj):
        """Gradients ``(dphi, dX)`` from the output adjoint ``adj`` (``(B, n)``)."""
        X, phi = self._check(X, phi)
        dphi = np.zeros_like(phi)
        dX = np.zeros_like(X)
        a = np.asarray(adj, dtype=np.complex128)
        for l in range(phi.shape[0] - 1, -1, -1):
            if self.entangler is not None:
                a = a @ self.entangler.conj()
            w, V, U, psi_prev = cache[l]
            N = adjoint_contract(w, V, a, psi_prev)
            s = (N.reshape(X.shape[0], -1) @ self._flat_t).real
            dphi[l] = np.sum(s * X, axis=0)
            dX += s * phi[l]
            a = np.einsum("bji,bj->bi", U.conj(), a)
        return dphi, dX
