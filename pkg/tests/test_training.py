import math

import numpy as np
import pytest

from quditvqc.data import Standardizer, split_dataset, synthesize_dataset
from quditvqc.errors import ConfigError, InvalidInputError, LabelError
from quditvqc.models import (
    BatchedQae,
    DenseNn,
    Qae,
    QaeQubitClassifier,
    QaeQuditClassifier,
    QubitVqc,
    QuditVqc,
    cross_entropy_loss,
)
from quditvqc.training import (
    Adam,
    TrainConfig,
    fit,
    numerical_gradient,
    qae_gradient,
    train_dense_nn,
    train_qae,
    train_vqc,
    vqc_gradient,
)


def rel_err(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


@pytest.fixture(scope="module")
def synth():
    ds = synthesize_dataset(0, 100)
    train, test = split_dataset(ds, 0.8, 0)
    sc = Standardizer.fit(train.X)
    return sc.transform(train.X), train.y, sc.transform(test.X), test.y


def test_cross_entropy_loss():
    assert cross_entropy_loss(np.eye(9)[3], 3) == 0.0
    assert cross_entropy_loss(np.full(9, 1 / 9), 4) == pytest.approx(math.log(9))
    clipped = cross_entropy_loss(np.eye(9)[0], 5)
    assert clipped == pytest.approx(-math.log(1e-12)) and math.isfinite(clipped)
    assert clipped == pytest.approx(27.631021115928547)
    with pytest.raises(LabelError):
        cross_entropy_loss(np.full(9, 1 / 9), 9)


def test_vqc_gradient_zero_features(rng):
    vqc = QuditVqc.init(rng, layers=3, scale=1.0)
    g = vqc_gradient(np.zeros(80), vqc, 4)
    assert g.shape == (3, 80)
    assert np.array_equal(g, np.zeros((3, 80)))


@pytest.mark.parametrize("layers,d", [(2, 3), (2, 9), (8, 9)])
def test_vqc_gradient_matches_finite_differences(rng, layers, d):
    worst = 0.0
    for _ in range(3):
        vqc = QuditVqc.init(rng, layers=layers, d=d, scale=0.5)
        x = rng.normal(size=d * d - 1)
        label = int(rng.integers(0, min(d, 9)))
        a = vqc_gradient(x, vqc, label, "analytic")
        f = vqc_gradient(x, vqc, label, "finite-difference")
        assert a.shape == (layers, d * d - 1)
        worst = max(worst, rel_err(a, f))
    assert worst < 1e-5


def test_raw_and_qubit_gradients(rng):
    X = rng.normal(size=(3, 5))
    y = np.array([0, 4, 8])
    raw = QuditVqc.init(rng, layers=2, n_inputs=5, perm_seed=1, scale=0.5)
    _, g = raw.loss_and_grad(X, y)
    assert rel_err(g["phi"], numerical_gradient(raw, X, y)["phi"]) < 1e-5
    for readout in ("first9", "marginal"):
        model = QaeQubitClassifier(BatchedQae.init(rng, scale=0.5), QubitVqc.init(rng, 2, 0.5, readout), True)
        _, g = model.loss_and_grad(X, y)
        num = numerical_gradient(model, X, y)
        for k in g:
            assert rel_err(g[k], num[k]) < 1e-5


def test_joint_encoder_gradient(rng):
    X = rng.normal(size=(2, 5))
    y = np.array([1, 7])
    model = QaeQuditClassifier(Qae.init(rng, scale=0.2), QuditVqc.init(rng, 2, scale=0.4), train_encoder=True)
    _, g = model.loss_and_grad(X, y)
    num = numerical_gradient(model, X, y)
    assert rel_err(g["w_enc"], num["w_enc"]) < 1e-5
    assert rel_err(g["phi"], num["phi"]) < 1e-5


def test_qae_gradient(rng):
    for _ in range(3):
        qae = Qae.init(rng, scale=0.3)
        X = rng.normal(size=(4, 5))
        a_enc, a_dec = qae_gradient(X, qae)
        f_enc, f_dec = qae_gradient(X, qae, "finite-difference")
        assert rel_err(a_enc, f_enc) < 1e-4
        assert rel_err(a_dec, f_dec) < 1e-4
    again = qae_gradient(X, qae)
    assert again[0].tobytes() == a_enc.tobytes()


def test_qae_gradient_at_perfect_reconstruction():
    basis = Qae.init(np.random.default_rng(0)).basis
    qae = Qae(np.zeros((5, 80)), np.zeros((18, 5)), basis)
    g_enc, g_dec = qae_gradient(np.zeros((3, 5)), qae)
    assert np.max(np.abs(g_enc)) < 1e-15 and np.max(np.abs(g_dec)) < 1e-15


def test_batched_qae_gradient(rng):
    bq = BatchedQae.init(rng, decoder_hidden=(6,), scale=0.4)
    X = rng.normal(size=(3, 5))
    _, g = bq.loss_and_grad(X)
    num = numerical_gradient(bq, X)
    for k in g:
        assert rel_err(g[k], num[k]) < 1e-4


def test_dense_nn_gradient_miniature(rng):
    for _ in range(3):
        nn = DenseNn.init(rng, widths=(5, 4, 9), scale=0.7)
        X = rng.normal(size=(6, 5))
        y = rng.integers(0, 9, size=6)
        _, g = nn.loss_and_grad(X, y)
        num = numerical_gradient(nn, X, y)
        for k in g:
            assert rel_err(g[k], num[k]) < 1e-4


def test_gradient_step_decreases_loss(rng):
    X = rng.normal(size=(5, 80))
    y = rng.integers(0, 9, size=5)
    vqc = QuditVqc.init(rng, layers=2, scale=0.3)
    loss0, g = vqc.loss_and_grad(X, y)
    for lr in (1e-3, 1e-4):
        stepped = vqc.with_params(phi=vqc.phi - lr * g["phi"])
        assert stepped.loss_and_grad(X, y)[0] < loss0


def test_adam_does_not_mutate(rng):
    p = {"a": rng.normal(size=3)}
    keep = p["a"].copy()
    new = Adam(p, lr=0.1).step(p, {"a": np.ones(3)})
    assert np.array_equal(p["a"], keep)
    assert np.allclose(new["a"], keep - 0.1, atol=1e-6)


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(grad_mode="parameter-shift")
    with pytest.raises(ConfigError):
        train_vqc(np.zeros((2, 5)), np.zeros(2, dtype=int), TrainConfig(epochs=0), kind="mystery")


def test_lr_zero_keeps_weights(synth):
    X, y, _, _ = synth
    cfg = TrainConfig(epochs=1, lr=0.0, seed=3)
    qae0 = Qae.init(np.random.default_rng(1))
    qae1, rep = train_qae(X, cfg, model=qae0)
    assert np.array_equal(qae1.w_enc, qae0.w_enc) and np.array_equal(qae1.w_dec, qae0.w_dec)
    assert len(rep.losses) == 1
    vqc0 = QuditVqc.init(np.random.default_rng(2), layers=2, n_inputs=5)
    vqc1, rep = train_vqc(X[:64], y[:64], cfg, model=vqc0)
    assert np.array_equal(vqc1.phi, vqc0.phi)
    assert all(math.isfinite(v) for v in rep.losses)


def test_empty_inputs():
    with pytest.raises(InvalidInputError):
        train_qae(np.zeros((0, 5)), TrainConfig())
    with pytest.raises(InvalidInputError):
        Qae.init(np.random.default_rng(0)).reconstruction_loss(np.zeros((0, 5)))


def test_train_qae_converges(synth):
    X = synth[0]
    qae, rep = train_qae(X, TrainConfig(epochs=50, seed=0))
    assert len(rep.losses) == 50 and rep.stage == "qae"
    assert rep.final_loss < 0.5 * rep.losses[0]
    # Adam jitters epoch to epoch on the plateau; compare consecutive 10-epoch block means
    blocks = np.asarray(rep.losses).reshape(-1, 10).mean(axis=1)
    assert np.all(np.diff(blocks) <= 0)
    again, _ = train_qae(X, TrainConfig(epochs=50, seed=0))
    assert again.w_enc.tobytes() == qae.w_enc.tobytes()


def test_train_vqc_on_separable_pair(synth):
    X, y, _, _ = synth
    keep = np.isin(y, [0, 8])
    Xs, ys = X[keep], y[keep]
    # the two clusters sit at opposite corners of the grid: a linear split exists
    w = np.linalg.lstsq(np.c_[Xs, np.ones(len(Xs))], (ys == 8).astype(float), rcond=None)[0]
    assert np.mean((np.c_[Xs, np.ones(len(Xs))] @ w > 0.5) == (ys == 8)) == 1.0
    model, rep = train_vqc(Xs, ys, TrainConfig(epochs=100, seed=0), kind="qudit-raw", layers=2)
    acc = np.mean(model.predict_proba(Xs).argmax(1) == ys)
    assert acc >= 0.95
    assert all(math.isfinite(v) for v in rep.losses)


def test_train_dense_nn(synth):
    X, y, _, _ = synth
    model0, rep = train_dense_nn(X, y, TrainConfig(epochs=0, seed=5))
    assert rep.losses == []
    ref = DenseNn.init(np.random.default_rng(np.random.SeedSequence(5).spawn(2)[0].generate_state(1)[0]))
    assert all(np.array_equal(a, b) for a, b in zip(model0.weights, ref.weights))
    m1, _ = train_dense_nn(X[:100], y[:100], TrainConfig(epochs=2, seed=5))
    m2, _ = train_dense_nn(X[:100], y[:100], TrainConfig(epochs=2, seed=5))
    assert all(a.tobytes() == b.tobytes() for a, b in zip(m1.weights, m2.weights))


def test_fit_requires_data():
    with pytest.raises(InvalidInputError):
        fit(DenseNn.init(np.random.default_rng(0)), np.zeros((0, 5)), np.zeros(0, dtype=int), TrainConfig())
