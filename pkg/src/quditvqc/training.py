"""Optimisation: Adam, minibatch loop, gradient oracles and the two training stages."""
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, InvalidInputError, LabelError
from .models import (
    BatchedQae,
    DenseNn,
    N_CLASSES,
    Qae,
    QaeQubitClassifier,
    QaeQuditClassifier,
    QubitVqc,
    QuditVqc,
)

GRAD_MODES = ("analytic", "finite-difference")
MODEL_KINDS = ("qae-qudit", "qudit-raw", "qae-qubits", "dense-nn")


class NumericalError(RuntimeError):
    """Loss became NaN or infinite during training."""

    def __init__(self, epoch, stage=""):
        self.epoch = epoch
        self.stage = stage
        super().__init__(f"non-finite loss at epoch {epoch}" + (f" ({stage})" if stage else ""))


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    grad_mode: str = "analytic"
    init_scale: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    fd_step: float = 1e-4

    def __post_init__(self):
        if not self.lr >= 0:
            raise ConfigError(f"learning rate must be non-negative, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.grad_mode not in GRAD_MODES:
            raise ConfigError(f"unknown gradient mode {self.grad_mode!r}; expected one of {GRAD_MODES}")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainReport:
    losses: list = field(default_factory=list)
    duration: float = 0.0
    grad_mode: str = "analytic"
    stage: str = ""

    @property
    def final_loss(self):
        return self.losses[-1] if self.losses else float("nan")

    def to_text(self):
        """``epoch loss`` pairs. Wall-clock time is left out so the file is reproducible."""
        lines = [f"# stage: {self.stage}", f"# grad_mode: {self.grad_mode}", "epoch loss"]
        lines += [f"{i + 1} {v:.17g}" for i, v in enumerate(self.losses)]
        return "\n".join(lines) + "\n"


class Adam:
    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        """Return updated copies of ``params``; the inputs are not modified."""
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        out = {}
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            out[k] = p - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
        return out


def numerical_gradient(model, X, y=None, step=1e-4, names=None):
    """Central finite differences of ``model.loss_and_grad(X, y)[0]`` for every trainable entry."""
    params = model.trainable()
    grads = {}
    for name in names or params:
        base = params[name]
        g = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            hi = base.copy()
            lo = base.copy()
            hi[idx] += step
            lo[idx] -= step
            f_hi = model.with_params(**{name: hi}).loss_and_grad(X, y)[0]
            f_lo = model.with_params(**{name: lo}).loss_and_grad(X, y)[0]
            g[idx] = (f_hi - f_lo) / (2.0 * step)
        grads[name] = g
    return grads


def loss_and_gradient(model, X, y, mode="analytic", step=1e-4):
    if mode == "analytic":
        return model.loss_and_grad(X, y)
    if mode == "finite-difference":
        return model.loss_and_grad(X, y)[0], numerical_gradient(model, X, y, step)
    raise ConfigError(f"unknown gradient mode {mode!r}")


def vqc_gradient(x, vqc, label, mode="analytic", step=1e-4):
    """Gradient of the cross-entropy of one sample with respect to the circuit weights, ``(L, D)``."""
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(label, dtype=np.int64))
    return loss_and_gradient(vqc, X, y, mode, step)[1]["phi"]


def qae_gradient(batch, qae, mode="analytic", step=1e-4):
    """Gradients of the reconstruction MSE: ``(d w_enc, d w_dec)``."""
    grads = loss_and_gradient(qae, batch, None, mode, step)[1]
    return grads["w_enc"], grads["w_dec"]


def fit(model, X, y, config, stage=""):
    """Minibatch Adam on ``model.trainable()``; returns the final snapshot and a report.

    The per-epoch loss is the mean of the minibatch losses seen in that epoch.
    Batches are drawn from a shuffle seeded by ``config.seed`` so a fixed seed
    reproduces the weight trajectory exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise InvalidInputError("training set is empty")
    rng = np.random.default_rng(config.seed)
    params = model.trainable()
    opt = Adam(params, config.lr, config.beta1, config.beta2, config.eps)
    report = TrainReport(grad_mode=config.grad_mode, stage=stage)
    start = time.perf_counter()
    n = X.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            yb = None if y is None else y[idx]
            # divergence shows up as a non-finite epoch loss below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_gradient(model, X[idx], yb, config.grad_mode, config.fd_step)
            params = opt.step(params, grads)
            model = model.with_params(**params)
            total += loss * idx.size
        epoch_loss = total / n
        if not math.isfinite(epoch_loss):
            raise NumericalError(epoch + 1, stage)
        report.losses.append(epoch_loss)
    report.duration = time.perf_counter() - start
    return model, report


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise InvalidInputError("training set is empty")
    if y is not None:
        y = np.asarray(y, dtype=np.int64)
        if y.shape[0] != X.shape[0]:
            raise InvalidInputError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if y.min() < 0 or y.max() >= N_CLASSES:
            raise LabelError(f"labels must lie in 0..{N_CLASSES - 1}")
    return X, y


def _child_seeds(seed, n):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def train_qae(X, config, latent=80, d=9, model=None):
    """Fit a QAE to reconstruct ``X``. Returns ``(qae, report)``."""
    X, _ = _check_xy(X, None)
    init_seed, loop_seed = _child_seeds(config.seed, 2)
    if model is None:
        model = Qae.init(np.random.default_rng(init_seed), X.shape[1], d, config.init_scale)
    if model.basis.size != latent:
        raise ConfigError(f"latent width {latent} must equal d*d-1 = {model.basis.size}")
    return fit(model, X, None, _reseed(config, loop_seed), stage="qae")


def train_batched_qae(X, config, decoder_hidden=(), model=None):
    X, _ = _check_xy(X, None)
    init_seed, loop_seed = _child_seeds(config.seed, 2)
    if model is None:
        model = BatchedQae.init(
            np.random.default_rng(init_seed), X.shape[1], decoder_hidden=decoder_hidden, scale=config.init_scale
        )
    return fit(model, X, None, _reseed(config, loop_seed), stage="batched-qae")


def _reseed(config, seed):
    return TrainConfig(**{**config.to_dict(), "seed": seed})


def train_vqc(X, y, config, kind="qae-qudit", qae=None, layers=None, perm_seed=0,
              readout="first9", train_encoder=False, model=None):
    """Train the circuit weights of a VQC classifier with a frozen front end.

    ``kind`` is ``qae-qudit`` (needs a trained :class:`Qae`), ``qudit-raw`` or
    ``qae-qubits`` (needs a trained :class:`BatchedQae`). Only ``phi`` is
    optimised unless ``train_encoder`` is set.
    """
    X, y = _check_xy(X, y)
    init_seed, loop_seed = _child_seeds(config.seed, 2)
    rng = np.random.default_rng(init_seed)
    if model is None:
        if kind == "qae-qudit":
            if not isinstance(qae, Qae):
                raise ConfigError("qae-qudit needs a trained Qae front end")
            vqc = QuditVqc.init(rng, layers or 8, qae.basis.d, config.init_scale)
            model = QaeQuditClassifier(qae, vqc, train_encoder)
        elif kind == "qudit-raw":
            model = QuditVqc.init(rng, layers or 8, 9, config.init_scale, n_inputs=X.shape[1], perm_seed=perm_seed)
        elif kind == "qae-qubits":
            if not isinstance(qae, BatchedQae):
                raise ConfigError("qae-qubits needs a trained BatchedQae front end")
            model = QaeQubitClassifier(qae, QubitVqc.init(rng, layers or 8, config.init_scale, readout), train_encoder)
        else:
            raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return fit(model, X, y, _reseed(config, loop_seed), stage=kind)


def train_dense_nn(X, y, config, widths=None, model=None):
    X, y = _check_xy(X, y)
    init_seed, loop_seed = _child_seeds(config.seed, 2)
    if model is None:
        widths = widths or (X.shape[1], 128, 256, 128, N_CLASSES)
        model = DenseNn.init(np.random.default_rng(init_seed), widths, config.init_scale)
    return fit(model, X, y, _reseed(config, loop_seed), stage="dense-nn")
