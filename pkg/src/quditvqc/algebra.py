"""Generalized Gell-Mann generators of su(d) and the unitary exponential map.

Generators are normalised so that ``trace(g_i g_j) = 2 delta_ij``. With that
choice ``d=2`` gives the Pauli matrices and ``d=3`` the Gell-Mann matrices.

Canonical order: symmetric off-diagonal pairs ``(j, k)``, ``j < k`` in
row-major order, then the antisymmetric pairs in the same order, then the
diagonal generators by increasing rank.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DimensionError, NormalizationError, ShapeError
from .kernels import expm_batch, divided_differences

HERMITIAN_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorBasis:
    """Ordered stack of the ``d**2 - 1`` generators, shape ``(D, d, d)``."""

    d: int
    matrices: np.ndarray = field(repr=False)
    ordering: str = "canonical"
    perm_seed: int | None = None

    def __post_init__(self):
        self.matrices.setflags(write=False)

    @property
    def size(self):
        return self.matrices.shape[0]

    def __len__(self):
        return self.size

    def __getitem__(self, j):
        return self.matrices[j]

    @property
    def flat(self):
        """Generators flattened to ``(D, d*d)`` for contractions."""
        return self.matrices.reshape(self.size, -1)


def _pair_indices(d):
    return [(j, k) for j in range(d) for k in range(j + 1, d)]


def gell_mann_matrices(d):
    """Generalized Gell-Mann matrices in canonical order as a ``(d*d-1, d, d)`` array."""
    if d < 2:
        raise DimensionError(f"qudit dimension must be >= 2, got {d}")
    pairs = _pair_indices(d)
    out = np.zeros((d * d - 1, d, d), dtype=np.complex128)
    idx = 0
    for j, k in pairs:
        out[idx, j, k] = out[idx, k, j] = 1.0
        idx += 1
    for j, k in pairs:
        out[idx, j, k] = -1j
        out[idx, k, j] = 1j
        idx += 1
    for rank in range(1, d):
        diag = np.zeros(d)
        diag[:rank] = 1.0
        diag[rank] = -rank
        out[idx] = np.diag(np.sqrt(2.0 / (rank * (rank + 1))) * diag)
        idx += 1
    return out


def build_generator_basis(d, perm_seed=None):
    """Generator basis of su(d), optionally shuffled by a seeded permutation.

    ``perm_seed=None`` keeps the canonical order. Any integer seed reorders the
    generators with ``numpy.random.default_rng(perm_seed).permutation``, so the
    same seed always gives the same order.
    """
    mats = gell_mann_matrices(int(d))
    if perm_seed is None:
        return GeneratorBasis(int(d), mats)
    order = np.random.default_rng(perm_seed).permutation(mats.shape[0])
    return GeneratorBasis(int(d), np.ascontiguousarray(mats[order]), "permuted", int(perm_seed))


def hermitian_residual(H):
    H = np.asarray(H)
    return float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0


def assemble_hermitian(coeffs, basis):
    """``sum_j coeffs[j] * g_j``."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (basis.size,):
        raise ShapeError(f"expected {basis.size} coefficients, got shape {coeffs.shape}")
    return (coeffs @ basis.flat).reshape(basis.d, basis.d)


def _check_hermitian(H):
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ContractError("matrix has non-finite entries")
    res = hermitian_residual(H)
    if res > HERMITIAN_TOL:
        raise ContractError(f"matrix is not Hermitian (residual {res:.3e})")
    return H


def exp_minus_i(H):
    """``exp(-iH)`` via the spectral decomposition of Hermitian ``H``."""
    H = _check_hermitian(H)
    _, _, U = expm_batch(H[None])
    return U[0]


def exp_derivative(H, dH):
    """Frechet derivative of ``H -> exp(-iH)`` at ``H`` in direction ``dH``.

    Computed in the eigenbasis of ``H``: ``V (F * (V^dagger dH V)) V^dagger``
    where ``F`` holds the divided differences of ``exp(-i lambda)``.
    """
    H = _check_hermitian(H)
    dH = np.asarray(dH, dtype=np.complex128)
    if dH.shape != H.shape:
        raise ShapeError(f"direction shape {dH.shape} does not match {H.shape}")
    w, V = np.linalg.eigh(H)
    F = divided_differences(w[None])[0]
    Vh = V.conj().T
    return V @ (F * (Vh @ dH @ V)) @ Vh


def rotation_gate(axis, angle, basis):
    """Single-parameter gate ``exp(-i angle * sum_j axis_j g_j)`` for a unit ``axis``."""
    axis = np.asarray(axis, dtype=np.float64)
    if axis.shape != (basis.size,):
        raise ShapeError(f"axis must have length {basis.size}, got shape {axis.shape}")
    norm = np.linalg.norm(axis)
    if abs(norm - 1.0) > 1e-9:
        raise NormalizationError(f"rotation axis must be a unit vector, norm is {norm!r}")
    return exp_minus_i(assemble_hermitian(angle * axis, basis))
