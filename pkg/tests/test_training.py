import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wrgnn.compgraph import build_practical
from wrgnn.datasets import gen_planted_partition
from wrgnn.model import NumericalError, WrgnnModel
from wrgnn.training import (Adam, Split, TrainConfig, accuracy_by_assortativity, evaluate, f1_micro,
                            stratified_split, train)


def test_adam_first_step_is_signed_lr():
    p = {"w": np.array([1.0, -2.0, 0.5])}
    opt = Adam(p, lr=0.1)
    opt.step(p, {"w": np.array([3.0, -0.01, 0.0])})
    np.testing.assert_allclose(p["w"], [0.9, -1.9, 0.5], atol=1e-6)


def test_adam_minimises_quadratic():
    p = {"w": np.array([5.0, -3.0])}
    opt = Adam(p, lr=0.1)
    for _ in range(500):
        opt.step(p, {"w": 2 * p["w"]})
    assert np.abs(p["w"]).max() < 1e-2


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1, 3), min_size=5, max_size=80), st.integers(0, 100))
def test_split_partitions_labeled_nodes(labels, seed):
    labels = np.array(labels)
    if not np.any(labels >= 0):
        return
    s = stratified_split(labels, 0.6, 0.2, seed)
    all_ = np.concatenate([s.train, s.val, s.test])
    assert len(all_) == len(set(all_.tolist()))
    assert sorted(all_.tolist()) == np.flatnonzero(labels >= 0).tolist()
    # every class appears in train
    assert set(labels[s.train].tolist()) == set(labels[labels >= 0].tolist())


def test_split_deterministic_and_roundtrip(tmp_path):
    y = np.arange(50) % 3
    a, b = stratified_split(y, 0.8, 0.1, 7), stratified_split(y, 0.8, 0.1, 7)
    assert a.to_json() == b.to_json()
    assert stratified_split(y, 0.8, 0.1, 8).to_json() != a.to_json()
    a.save(tmp_path / "s.json")
    assert Split.load(tmp_path / "s.json").to_json() == a.to_json()
    with pytest.raises(ValueError):
        stratified_split(y, 0.9, 0.2)


def test_f1_micro_equals_accuracy():
    rng = np.random.default_rng(0)
    y, p = rng.integers(4, size=100), rng.integers(4, size=100)
    assert f1_micro(y, p) == pytest.approx(np.mean(y == p))


def test_accuracy_by_assortativity():
    r = np.array([-0.95, -0.9, 0.05, 0.95, np.nan])
    rows = accuracy_by_assortativity(r, np.arange(5), np.array([1, 0, 1, 1, 1], bool), bins=4)
    assert [row[2] for row in rows] == [2, 0, 1, 1]
    assert rows[0][3] == 0.5


@pytest.fixture(scope="module")
def small_problem():
    g = gen_planted_partition(n=60, blocks=2, p_in=0.25, p_out=0.03, noise=0.8, seed=2)
    c = build_practical(g, 1)
    return g, c, stratified_split(g.labels, 0.5, 0.2, 0)


def fit(problem, **kw):
    g, c, split = problem
    cfg = TrainConfig(**{"epochs": 80, "patience": 30, "hidden": 8, "mlp_hidden": 8, **kw})
    model = WrgnnModel.init(cfg.model_config(g.features.shape[1], 2, c.names), cfg.seed)
    return train(model, c, g.features, g.labels, split, cfg)


def test_training_learns_and_is_deterministic(small_problem):
    g, c, split = small_problem
    m1, h1 = fit(small_problem)
    m2, h2 = fit(small_problem)
    assert h1.train_loss == h2.train_loss
    assert h1.train_loss[-1] < h1.train_loss[0]
    ev = evaluate(m1, c, g.features, g.labels, split.test)
    assert ev.accuracy > 0.8
    assert ev.f1_micro == pytest.approx(ev.accuracy)
    # best epoch is the argmax of validation accuracy (ties -> lower loss)
    keys = list(zip(h1.val_acc, [-v for v in h1.val_loss]))
    assert h1.best_epoch == max(range(len(keys)), key=lambda i: (keys[i], -i))


def test_early_stopping(small_problem):
    _, h = fit(small_problem, lr=0.0)
    assert len(h.train_loss) == 31 and h.best_epoch == 0


def test_evaluate_accepts_mask(small_problem):
    g, c, split = small_problem
    m, _ = fit(small_problem, epochs=2)
    mask = split.masks(g.num_nodes)[2]
    a = evaluate(m, c, g.features, g.labels, mask)
    b = evaluate(m, c, g.features, g.labels, split.test)
    assert a.accuracy == b.accuracy
    with pytest.raises(ValueError):
        evaluate(m, c, g.features, g.labels, np.zeros(g.num_nodes, bool))


def test_non_finite_loss_raises(small_problem):
    g, c, split = small_problem
    x = g.features.copy()
    x[0, 0] = np.nan
    cfg = TrainConfig(epochs=3)
    model = WrgnnModel.init(cfg.model_config(x.shape[1], 2, c.names), 0)
    with pytest.raises(NumericalError):
        train(model, c, x, g.labels, split, cfg)


def test_unlabeled_in_split_rejected(small_problem):
    g, c, split = small_problem
    y = g.labels.copy()
    y[split.train[0]] = -1
    cfg = TrainConfig(epochs=1)
    model = WrgnnModel.init(cfg.model_config(g.features.shape[1], 2, c.names), 0)
    with pytest.raises(ValueError):
        train(model, c, g.features, y, split, cfg)
