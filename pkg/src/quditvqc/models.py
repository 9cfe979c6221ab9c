"""Classifiers and embedders: qudit VQC, raw-qudit VQC, qubit VQC, QAEs, dense NN.

Every model is an immutable snapshot exposing

* ``trainable()``: name -> array of the weights an optimizer may update,
* ``with_params(**arrays)``: a new snapshot with some arrays replaced,
* ``loss_and_grad(X, y)``: mean batch loss and its gradient per trainable array,
* ``n_params``: number of stored weights.

Classifiers also provide ``predict_proba(X) -> (B, 9)``. Inputs are expected to
be standardised already (see :class:`quditvqc.data.Standardizer`).
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import GeneratorBasis, build_generator_basis, exp_minus_i
from .circuit import ReuploadingCircuit
from .errors import ConfigError, InvalidInputError, LabelError, ShapeError
from .simulator import cnot_cascade, embed_single_qubit_gate

N_CLASSES = 9
PROB_FLOOR = 1e-12

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=np.complex128
)

READOUTS = ("first9", "marginal")


# -- losses ------------------------------------------------------------------

def cross_entropy_loss(probs, label):
    """``-log(max(probs[label], 1e-12))`` for a single probability vector."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= int(label) < probs.shape[-1]:
        raise LabelError(f"label {label} outside 0..{probs.shape[-1] - 1}")
    return float(-np.log(max(probs[int(label)], PROB_FLOOR)))


def _check_labels(y, n_classes=N_CLASSES):
    y = np.asarray(y)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise LabelError(f"labels must lie in 0..{n_classes - 1}")
    return y.astype(np.int64)


def batch_cross_entropy(P, y):
    """Mean clipped cross-entropy over a batch and its gradient w.r.t. ``P``."""
    y = _check_labels(y, P.shape[1])
    rows = np.arange(P.shape[0])
    py = P[rows, y]
    loss = float(np.mean(-np.log(np.maximum(py, PROB_FLOOR))))
    dP = np.zeros_like(P)
    live = py > PROB_FLOOR
    dP[rows[live], y[live]] = -1.0 / (P.shape[0] * py[live])
    return loss, dP


def _as_batch(X, width, what):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != width:
        raise ShapeError(f"{what} expects {width} features, got {X.shape[1]}")
    return X, single


def _init(rng, shape, scale):
    return rng.normal(0.0, scale, size=shape)


# -- qudit VQC ---------------------------------------------------------------

def vqc_unit(x, phi_l, basis):
    """Basic layer unitary ``exp(-i sum_j x_j phi_l[j] g_j)``."""
    x = np.asarray(x, dtype=np.float64)
    phi_l = np.asarray(phi_l, dtype=np.float64)
    if x.shape != (basis.size,) or phi_l.shape != (basis.size,):
        raise ShapeError(f"x and phi_l must both have length {basis.size}")
    return exp_minus_i(((x * phi_l) @ basis.flat).reshape(basis.d, basis.d))


def raw_qudit_unit(x, phi_l, basis, n_inputs=5):
    """Layer unitary with the first ``n_inputs`` features encoded and the rest set to one."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n_inputs,):
        raise ShapeError(f"raw qudit layer takes exactly {n_inputs} features, got shape {x.shape}")
    return vqc_unit(np.concatenate([x, np.ones(basis.size - n_inputs)]), phi_l, basis)


@dataclass(frozen=True)
class QuditVqc:
    """Single-qudit re-uploading classifier.

    ``phi`` has shape ``(L, D)``. With ``n_inputs`` set, only that many
    features are read and the remaining ``D - n_inputs`` encodings are fixed to
    one (the raw-qudit ablation); otherwise ``D`` features are expected.
    """

    phi: np.ndarray
    basis: GeneratorBasis = field(repr=False)
    n_inputs: int | None = None

    kind = "qudit-vqc"

    def __post_init__(self):
        if self.phi.ndim != 2 or self.phi.shape[1] != self.basis.size:
            raise ShapeError(f"phi must be (L, {self.basis.size}), got {self.phi.shape}")

    @classmethod
    def init(cls, rng, layers=8, d=9, scale=0.1, n_inputs=None, perm_seed=None):
        basis = build_generator_basis(d, perm_seed)
        return cls(_init(rng, (layers, basis.size), scale), basis, n_inputs)

    @property
    def layers(self):
        return self.phi.shape[0]

    @property
    def n_params(self):
        return int(self.phi.size)

    @property
    def n_features(self):
        return self.basis.size if self.n_inputs is None else self.n_inputs

    @property
    def n_classes(self):
        return min(self.basis.d, N_CLASSES)

    @property
    def circuit(self):
        circ = getattr(self, "_circuit", None)
        if circ is None:
            circ = ReuploadingCircuit(self.basis.matrices)
            object.__setattr__(self, "_circuit", circ)
        return circ

    def trainable(self):
        return {"phi": self.phi}

    def with_params(self, **arrays):
        return replace(self, **arrays)

    def encode(self, X):
        X, _ = _as_batch(X, self.n_features, "qudit VQC")
        if self.n_inputs is None:
            return X
        return np.hstack([X, np.ones((X.shape[0], self.basis.size - self.n_inputs))])

    def states(self, X):
        return self.circuit.forward(self.encode(X), self.phi)

    def predict_proba(self, X):
        X, single = _as_batch(X, self.n_features, "qudit VQC")
        psi = self.states(X)
        P = (psi.real**2 + psi.imag**2)[:, : self.n_classes]
        return P[0] if single else P

    def loss_and_grad(self, X, y, feature_grad=False):
        Xe = self.encode(X)
        psi, cache = self.circuit.forward(Xe, self.phi, keep_cache=True)
        P = psi.real**2 + psi.imag**2
        loss, dP = batch_cross_entropy(P[:, : self.n_classes], y)
        dP = np.pad(dP, ((0, 0), (0, P.shape[1] - dP.shape[1])))
        dphi, dX = self.circuit.backward(Xe, self.phi, cache, 2.0 * dP * psi)
        grads = {"phi": dphi}
        if feature_grad:
            grads["features"] = dX[:, : self.n_features]
        return loss, grads


def qudit_vqc_forward(x, vqc):
    return vqc.predict_proba(x)


# -- qubit VQC ---------------------------------------------------------------

def _qubit_generators(q):
    gens = [embed_single_qubit_gate(PAULI[i], qubit, q) for qubit in range(q) for i in range(3)]
    return np.stack(gens)


def readout_classes(P16, mode="first9"):
    """Map register outcome probabilities ``(B, 2**q)`` to 9 class probabilities."""
    if mode == "first9":
        head = P16[:, :N_CLASSES]
        return head / np.maximum(head.sum(axis=1, keepdims=True), PROB_FLOOR)
    if mode == "marginal":
        out = np.zeros((P16.shape[0], N_CLASSES))
        for k in range(P16.shape[1]):
            out[:, k % N_CLASSES] += P16[:, k]
        return out
    raise ConfigError(f"unknown readout {mode!r}; expected one of {READOUTS}")


def _readout_vjp(P16, dQ, mode):
    if mode == "first9":
        head = P16[:, :N_CLASSES]
        S = np.maximum(head.sum(axis=1, keepdims=True), PROB_FLOOR)
        Q = head / S
        dP = np.zeros_like(P16)
        dP[:, :N_CLASSES] = (dQ - np.sum(dQ * Q, axis=1, keepdims=True)) / S
        return dP
    return dQ[:, np.arange(P16.shape[1]) % N_CLASSES]


@dataclass(frozen=True)
class QubitVqc:
    """Four-qubit re-uploading circuit with a CNOT cascade after each layer.

    Qubit ``k`` receives features ``3k..3k+2`` through
    ``exp(-i sum_i x_i phi_i sigma_i)``; ``phi`` has shape ``(m, 12)``.
    """

    phi: np.ndarray
    readout: str = "first9"
    qubits: int = 4

    kind = "qubit-vqc"

    def __post_init__(self):
        if self.phi.ndim != 2 or self.phi.shape[1] != 3 * self.qubits:
            raise ShapeError(f"phi must be (m, {3 * self.qubits}), got {self.phi.shape}")
        if self.readout not in READOUTS:
            raise ConfigError(f"unknown readout {self.readout!r}; expected one of {READOUTS}")

    @classmethod
    def init(cls, rng, layers=8, scale=0.1, readout="first9", qubits=4):
        return cls(_init(rng, (layers, 3 * qubits), scale), readout, qubits)

    @property
    def n_params(self):
        return int(self.phi.size)

    @property
    def n_features(self):
        return 3 * self.qubits

    @property
    def circuit(self):
        circ = getattr(self, "_circuit", None)
        if circ is None:
            circ = ReuploadingCircuit(_qubit_generators(self.qubits), cnot_cascade(self.qubits))
            object.__setattr__(self, "_circuit", circ)
        return circ

    def trainable(self):
        return {"phi": self.phi}

    def with_params(self, **arrays):
        return replace(self, **arrays)

    def predict_proba(self, X):
        X, single = _as_batch(X, self.n_features, "qubit VQC")
        psi = self.circuit.forward(X, self.phi)
        Q = readout_classes(psi.real**2 + psi.imag**2, self.readout)
        return Q[0] if single else Q

    def loss_and_grad(self, X, y, feature_grad=False):
        X, _ = _as_batch(X, self.n_features, "qubit VQC")
        psi, cache = self.circuit.forward(X, self.phi, keep_cache=True)
        P16 = psi.real**2 + psi.imag**2
        loss, dQ = batch_cross_entropy(readout_classes(P16, self.readout), y)
        dP = _readout_vjp(P16, dQ, self.readout)
        dphi, dX = self.circuit.backward(X, self.phi, cache, 2.0 * dP * psi)
        grads = {"phi": dphi}
        if feature_grad:
            grads["features"] = dX
        return loss, grads


def qubit_vqc_forward(x12, vqc):
    return vqc.predict_proba(x12)


# -- quantum autoencoders ----------------------------------------------------

def _split_complex(psi):
    return np.hstack([psi.real, psi.imag])


def _reconstruction(X, Xr):
    M = X.shape[0]
    diff = Xr - X
    return float(np.sum(diff**2) / M), 2.0 * diff / M


@dataclass(frozen=True)
class Qae:
    """Linear encoder ``K -> D``, qudit feature map, linear decoder ``2d -> K``. No biases."""

    w_enc: np.ndarray
    w_dec: np.ndarray
    basis: GeneratorBasis = field(repr=False)

    kind = "qae"

    def __post_init__(self):
        K, D = self.w_enc.shape
        if D != self.basis.size:
            raise ShapeError(f"encoder width {D} must equal the generator count {self.basis.size}")
        if self.w_dec.shape != (2 * self.basis.d, K):
            raise ShapeError(f"decoder must be ({2 * self.basis.d}, {K}), got {self.w_dec.shape}")

    @classmethod
    def init(cls, rng, n_inputs=5, d=9, scale=0.1):
        basis = build_generator_basis(d)
        w_enc = _init(rng, (n_inputs, basis.size), scale)
        w_dec = _init(rng, (2 * d, n_inputs), scale)
        return cls(w_enc, w_dec, basis)

    @property
    def n_inputs(self):
        return self.w_enc.shape[0]

    @property
    def n_params(self):
        return int(self.w_enc.size + self.w_dec.size)

    @property
    def circuit(self):
        circ = getattr(self, "_circuit", None)
        if circ is None:
            circ = ReuploadingCircuit(self.basis.matrices)
            object.__setattr__(self, "_circuit", circ)
        return circ

    def trainable(self):
        return {"w_enc": self.w_enc, "w_dec": self.w_dec}

    def with_params(self, **arrays):
        return replace(self, **arrays)

    def encode(self, X):
        X, single = _as_batch(X, self.n_inputs, "QAE encoder")
        Z = X @ self.w_enc
        return Z[0] if single else Z

    def bottleneck(self, Z):
        Z, single = _as_batch(Z, self.basis.size, "QAE bottleneck")
        psi = self.circuit.forward(Z, np.ones((1, self.basis.size)))
        return psi[0] if single else psi

    def decode(self, amps):
        amps = np.asarray(amps, dtype=np.complex128)
        single = amps.ndim == 1
        amps = np.atleast_2d(amps)
        if amps.shape[1] != self.basis.d:
            raise ShapeError(f"decoder expects {self.basis.d} amplitudes, got {amps.shape[1]}")
        out = _split_complex(amps) @ self.w_dec
        return out[0] if single else out

    def reconstruct(self, X):
        return self.decode(self.bottleneck(self.encode(X)))

    def reconstruction_loss(self, X):
        X = _nonempty(X, self.n_inputs)
        return _reconstruction(X, self.reconstruct(X))[0]

    def loss_and_grad(self, X, y=None):
        X = _nonempty(X, self.n_inputs)
        ones = np.ones((1, self.basis.size))
        Z = X @ self.w_enc
        psi, cache = self.circuit.forward(Z, ones, keep_cache=True)
        R = _split_complex(psi)
        loss, dXr = _reconstruction(X, R @ self.w_dec)
        dR = dXr @ self.w_dec.T
        d = self.basis.d
        _, dZ = self.circuit.backward(Z, ones, cache, dR[:, :d] + 1j * dR[:, d:])
        return loss, {"w_enc": X.T @ dZ, "w_dec": R.T @ dXr}


def _nonempty(X, width):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise InvalidInputError("batch is empty")
    if X.shape[1] != width:
        raise ShapeError(f"expected {width} features, got {X.shape[1]}")
    return X


def qae_encode(x, qae):
    return qae.encode(x)


def quantum_bottleneck(chi, qae_or_basis):
    """Amplitudes of ``exp(-i sum_j chi_j g_j)|0>``."""
    if isinstance(qae_or_basis, GeneratorBasis):
        chi = np.asarray(chi, dtype=np.float64)
        if chi.shape != (qae_or_basis.size,):
            raise ShapeError(f"expected {qae_or_basis.size} latent features, got shape {chi.shape}")
        return ReuploadingCircuit(qae_or_basis.matrices).forward(chi[None], np.ones((1, chi.size)))[0]
    return qae_or_basis.bottleneck(chi)


def qae_decode(amps, qae):
    return qae.decode(amps)


def qae_reconstruction_loss(batch, qae):
    return qae.reconstruction_loss(batch)


@dataclass(frozen=True)
class BatchedQae:
    """Per-qubit QAE front end for the qubit model.

    Block ``k`` maps the shared ``K`` inputs to three latent features
    (``w_enc[k]`` is ``K x 3``) that set a single-qubit state
    ``exp(-i sum_i z_i sigma_i)|0>``. The decoder reads the 16 real and
    imaginary amplitudes of the four qubits, optionally through a hidden
    linear layer, back to ``K`` outputs.
    """

    w_enc: np.ndarray
    w_dec: tuple

    kind = "batched-qae"

    def __post_init__(self):
        if self.w_enc.ndim != 3 or self.w_enc.shape[2] != 3:
            raise ShapeError(f"w_enc must be (blocks, K, 3), got {self.w_enc.shape}")
        widths = [4 * self.blocks] + [w.shape[1] for w in self.w_dec]
        for w, width in zip(self.w_dec, widths):
            if w.shape[0] != width:
                raise ShapeError("decoder layer shapes do not chain")
        if widths[-1] != self.n_inputs:
            raise ShapeError(f"decoder must end at {self.n_inputs} outputs, got {widths[-1]}")

    @classmethod
    def init(cls, rng, n_inputs=5, blocks=4, decoder_hidden=(), scale=0.1):
        w_enc = _init(rng, (blocks, n_inputs, 3), scale)
        widths = [4 * blocks, *decoder_hidden, n_inputs]
        w_dec = tuple(_init(rng, (a, b), scale) for a, b in zip(widths[:-1], widths[1:]))
        return cls(w_enc, w_dec)

    @property
    def blocks(self):
        return self.w_enc.shape[0]

    @property
    def n_inputs(self):
        return self.w_enc.shape[1]

    @property
    def n_params(self):
        return int(self.w_enc.size + sum(w.size for w in self.w_dec))

    @property
    def circuit(self):
        circ = getattr(self, "_circuit", None)
        if circ is None:
            circ = ReuploadingCircuit(PAULI)
            object.__setattr__(self, "_circuit", circ)
        return circ

    def trainable(self):
        out = {"w_enc": self.w_enc}
        out.update({f"w_dec{i}": w for i, w in enumerate(self.w_dec)})
        return out

    def with_params(self, **arrays):
        w_dec = tuple(arrays.pop(f"w_dec{i}", w) for i, w in enumerate(self.w_dec))
        return replace(self, w_dec=w_dec, **arrays)

    def encode(self, X):
        """Latent features ``(B, 3 * blocks)``, block ``k`` in columns ``3k..3k+2``."""
        X, single = _as_batch(X, self.n_inputs, "batched QAE")
        Z = np.einsum("bk,qkj->bqj", X, self.w_enc).reshape(X.shape[0], -1)
        return Z[0] if single else Z

    def _qubit_states(self, Z):
        return self.circuit.forward(Z.reshape(-1, 3), np.ones((1, 3)))

    def reconstruct(self, X):
        X = _nonempty(X, self.n_inputs)
        psi = self._qubit_states(self.encode(X))
        h = _split_complex(psi).reshape(X.shape[0], -1)
        for w in self.w_dec:
            h = h @ w
        return h

    def reconstruction_loss(self, X):
        X = _nonempty(X, self.n_inputs)
        return _reconstruction(X, self.reconstruct(X))[0]

    def loss_and_grad(self, X, y=None):
        X = _nonempty(X, self.n_inputs)
        B = X.shape[0]
        Z = self.encode(X)
        flatZ = Z.reshape(B * self.blocks, 3)
        ones = np.ones((1, 3))
        psi, cache = self.circuit.forward(flatZ, ones, keep_cache=True)
        hs = [_split_complex(psi).reshape(B, -1)]
        for w in self.w_dec:
            hs.append(hs[-1] @ w)
        loss, dh = _reconstruction(X, hs[-1])
        grads = {}
        for i in range(len(self.w_dec) - 1, -1, -1):
            grads[f"w_dec{i}"] = hs[i].T @ dh
            dh = dh @ self.w_dec[i].T
        dR = dh.reshape(B * self.blocks, 4)
        _, dZ = self.circuit.backward(flatZ, ones, cache, dR[:, :2] + 1j * dR[:, 2:])
        grads["w_enc"] = np.einsum("bk,bqj->qkj", X, dZ.reshape(B, self.blocks, 3))
        return loss, grads


def batched_qae_forward(x, bqae):
    return bqae.encode(x)


# -- dense baseline ----------------------------------------------------------

def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class DenseNn:
    """Bias-free ReLU network ``K x 128 x 256 x 128 x 9`` with a softmax output."""

    weights: tuple

    kind = "dense-nn"

    @classmethod
    def init(cls, rng, widths=(5, 128, 256, 128, 9), scale=0.1):
        return cls(tuple(_init(rng, (a, b), scale) for a, b in zip(widths[:-1], widths[1:])))

    @property
    def widths(self):
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_params(self):
        return int(sum(w.size for w in self.weights))

    def trainable(self):
        return {f"w{i}": w for i, w in enumerate(self.weights)}

    def with_params(self, **arrays):
        return replace(self, weights=tuple(arrays.get(f"w{i}", w) for i, w in enumerate(self.weights)))

    def _forward(self, X):
        hs = [X]
        for w in self.weights[:-1]:
            hs.append(np.maximum(hs[-1] @ w, 0.0))
        return hs, _softmax(hs[-1] @ self.weights[-1])

    def predict_proba(self, X):
        X, single = _as_batch(X, self.widths[0], "dense NN")
        P = self._forward(X)[1]
        return P[0] if single else P

    def loss_and_grad(self, X, y):
        X, _ = _as_batch(X, self.widths[0], "dense NN")
        hs, P = self._forward(X)
        loss, dP = batch_cross_entropy(P, y)
        dz = P * (dP - np.sum(dP * P, axis=1, keepdims=True))
        grads = {}
        for i in range(len(self.weights) - 1, -1, -1):
            grads[f"w{i}"] = hs[i].T @ dz
            if i:
                dz = (dz @ self.weights[i].T) * (hs[i] > 0)
        return loss, grads


def dense_nn_forward(x, nn):
    return nn.predict_proba(x)


# -- two-stage pipelines -----------------------------------------------------

@dataclass(frozen=True)
class QaeQuditClassifier:
    """QAE encoder feeding the qudit VQC. Only the encoder half is used at inference."""

    qae: Qae
    vqc: QuditVqc
    train_encoder: bool = False

    kind = "qae-qudit"

    @property
    def n_params(self):
        return self.qae.n_params + self.vqc.n_params

    def trainable(self):
        out = {"phi": self.vqc.phi}
        if self.train_encoder:
            out["w_enc"] = self.qae.w_enc
        return out

    def with_params(self, **arrays):
        qae = self.qae.with_params(w_enc=arrays["w_enc"]) if "w_enc" in arrays else self.qae
        vqc = self.vqc.with_params(phi=arrays["phi"]) if "phi" in arrays else self.vqc
        return replace(self, qae=qae, vqc=vqc)

    def predict_proba(self, X):
        X, single = _as_batch(X, self.qae.n_inputs, "QAE-qudit classifier")
        P = self.vqc.predict_proba(self.qae.encode(X))
        return P[0] if single else P

    def loss_and_grad(self, X, y):
        X, _ = _as_batch(X, self.qae.n_inputs, "QAE-qudit classifier")
        loss, g = self.vqc.loss_and_grad(self.qae.encode(X), y, feature_grad=self.train_encoder)
        grads = {"phi": g["phi"]}
        if self.train_encoder:
            grads["w_enc"] = X.T @ g["features"]
        return loss, grads


def qae_qudit_forward(x, qae, vqc):
    return vqc.predict_proba(qae.encode(x))


@dataclass(frozen=True)
class QaeQubitClassifier:
    """Batched QAE encoder feeding the four-qubit VQC."""

    qae: BatchedQae
    vqc: QubitVqc
    train_encoder: bool = False

    kind = "qae-qubits"

    @property
    def n_params(self):
        return self.qae.n_params + self.vqc.n_params

    def trainable(self):
        out = {"phi": self.vqc.phi}
        if self.train_encoder:
            out["w_enc"] = self.qae.w_enc
        return out

    def with_params(self, **arrays):
        qae = self.qae.with_params(w_enc=arrays["w_enc"]) if "w_enc" in arrays else self.qae
        vqc = self.vqc.with_params(phi=arrays["phi"]) if "phi" in arrays else self.vqc
        return replace(self, qae=qae, vqc=vqc)

    def predict_proba(self, X):
        X, single = _as_batch(X, self.qae.n_inputs, "QAE-qubit classifier")
        P = self.vqc.predict_proba(self.qae.encode(X))
        return P[0] if single else P

    def loss_and_grad(self, X, y):
        X, _ = _as_batch(X, self.qae.n_inputs, "QAE-qubit classifier")
        loss, g = self.vqc.loss_and_grad(self.qae.encode(X), y, feature_grad=self.train_encoder)
        grads = {"phi": g["phi"]}
        if self.train_encoder:
            dZ = g["features"].reshape(X.shape[0], self.qae.blocks, 3)
            grads["w_enc"] = np.einsum("bk,bqj->qkj", X, dZ)
        return loss, grads
