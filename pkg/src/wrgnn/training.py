"""Adam training loop, evaluation metrics and train/val/test splits."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .compgraph import ComputationGraph
from .model import ModelConfig, NumericalError, WrgnnModel, prepare, rng_stream, softmax

log = logging.getLogger(__name__)

# per-dataset-family hyper-parameter defaults
PRESETS = {
    "webpages": dict(lr=1e-2, weight_decay=5e-4, dropout=0.8),
    "citation": dict(lr=1e-2, weight_decay=5e-4, dropout=0.5),
    "air-traffic": dict(lr=1e-3, weight_decay=5e-6, dropout=0.6),
    "bgp": dict(lr=1e-2, weight_decay=0.0, dropout=0.5),
}


@dataclass
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def masks(self, n):
        out = []
        for idx in (self.train, self.val, self.test):
            m = np.zeros(n, dtype=bool)
            m[idx] = True
            out.append(m)
        return out

    def to_json(self):
        return {k: sorted(int(i) for i in getattr(self, k)) for k in ("train", "val", "test")}

    @classmethod
    def from_json(cls, d):
        return cls(*(np.asarray(d[k], dtype=np.int64) for k in ("train", "val", "test")))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def stratified_split(labels, train: float, val: float, seed: int = 0) -> Split:
    """Random per-class split of the labeled nodes; the remainder is test."""
    if train <= 0 or val < 0 or train + val >= 1.0 + 1e-12:
        raise ValueError("need 0 < train, 0 <= val and train + val < 1")
    labels = np.asarray(labels)
    rng = rng_stream(seed, "splits")
    parts = ([], [], [])
    for cls in np.unique(labels[labels >= 0]):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n_tr = max(1, int(round(train * len(idx))))
        n_va = int(round(val * len(idx)))
        n_tr = min(n_tr, len(idx))
        n_va = min(n_va, len(idx) - n_tr)
        parts[0].append(idx[:n_tr])
        parts[1].append(idx[n_tr:n_tr + n_va])
        parts[2].append(idx[n_tr + n_va:])
    return Split(*(np.sort(np.concatenate(p)) for p in parts))


@dataclass
class TrainConfig:
    lr: float = 1e-2
    weight_decay: float = 5e-4
    epochs: int = 500
    patience: int = 100
    dropout: float = 0.5
    seed: int = 0
    hidden: int = 32
    mlp_hidden: int = 32
    attention: bool = True
    shared_attention: bool = False
    num_layers: int = 2

    def model_config(self, in_dim, num_classes, relations) -> ModelConfig:
        return ModelConfig(in_dim=in_dim, num_classes=num_classes, relations=list(relations),
                           hidden=self.hidden, mlp_hidden=self.mlp_hidden,
                           num_layers=self.num_layers, attention=self.attention,
                           shared_attention=self.shared_attention, dropout=self.dropout)


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    best_epoch: int = -1

    def as_dict(self):
        return asdict(self)


class Adam:
    def __init__(self, params, lr, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, betas[0], betas[1], eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _cross_entropy(prob, labels, idx):
    if len(idx) == 0:
        return float("nan")
    return float(-np.mean(np.log(np.maximum(prob[idx, labels[idx]], 1e-300))))


def _accuracy(prob, labels, idx):
    if len(idx) == 0:
        return float("nan")
    return float(np.mean(prob[idx].argmax(axis=1) == labels[idx]))


def train(model: WrgnnModel, c: ComputationGraph, features, labels, split: Split,
          cfg: TrainConfig) -> tuple[WrgnnModel, History]:
    """Fit with Adam and keep the parameters of the best validation epoch.

    Validation accuracy decides "best", validation loss breaks ties. Training
    stops after ``cfg.patience`` epochs without improvement.
    """
    labels = np.asarray(labels)
    x = np.asarray(features, dtype=float)
    rels = prepare(c)
    n = c.num_nodes
    tr_mask, _, _ = split.masks(n)
    tr, va = split.train, split.val
    if len(tr) == 0:
        raise ValueError("empty training split")
    if np.any(labels[np.r_[tr, va, split.test]] < 0):
        raise ValueError("splits may only contain labeled nodes")
    opt = Adam(model.params, cfg.lr)
    drop_rng = rng_stream(cfg.seed, "dropout")
    hist = History()
    best = model.copy()
    best_key = (-np.inf, -np.inf)
    stale = 0
    for epoch in range(cfg.epochs):
        masks = model.dropout_masks(n, drop_rng)
        loss, grads = model.loss_and_gradients(rels, x, labels, tr_mask, cfg.weight_decay, masks)
        if not np.isfinite(loss):
            raise NumericalError(f"non-finite training loss at epoch {epoch}: {loss}")
        opt.step(model.params, grads)
        prob = softmax(model.logits(rels, x))
        if not np.all(np.isfinite(prob)):
            raise NumericalError(f"non-finite predictions after epoch {epoch}")
        hist.train_loss.append(_cross_entropy(prob, labels, tr))
        hist.train_acc.append(_accuracy(prob, labels, tr))
        hist.val_loss.append(_cross_entropy(prob, labels, va))
        hist.val_acc.append(_accuracy(prob, labels, va))
        if len(va):
            key = (hist.val_acc[-1], -hist.val_loss[-1])
        else:
            key = (hist.train_acc[-1], -hist.train_loss[-1])
        if key > best_key:
            best_key = key
            best = model.copy()
            hist.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return best, hist


@dataclass
class Evaluation:
    accuracy: float
    f1_micro: float
    correct: np.ndarray      # per node in the evaluated mask order
    nodes: np.ndarray
    predictions: np.ndarray


def f1_micro(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = np.union1d(y_true, y_pred)
    tp = sum(int(np.sum((y_pred == k) & (y_true == k))) for k in classes)
    fp = sum(int(np.sum((y_pred == k) & (y_true != k))) for k in classes)
    fn = sum(int(np.sum((y_pred != k) & (y_true == k))) for k in classes)
    return 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0


def evaluate(model: WrgnnModel, c, features, labels, nodes) -> Evaluation:
    nodes = np.asarray(nodes)
    nodes = np.flatnonzero(nodes) if nodes.dtype == bool else nodes.astype(np.int64)
    if len(nodes) == 0:
        raise ValueError("empty evaluation mask")
    labels = np.asarray(labels)
    pred = model.forward(c, features).argmax(axis=1)[nodes]
    correct = pred == labels[nodes]
    return Evaluation(float(correct.mean()), f1_micro(labels[nodes], pred), correct, nodes, pred)


def accuracy_by_assortativity(r_local, nodes, correct, bins: int = 10):
    """Accuracy of evaluated nodes grouped by fixed-width local-assortativity bins."""
    r = np.asarray(r_local)[nodes]
    ok = ~np.isnan(r)
    edges = np.linspace(-1.0, 1.0, bins + 1)
    which = np.clip(np.digitize(np.clip(r[ok], -1, 1), edges) - 1, 0, bins - 1)
    rows = []
    for b in range(bins):
        sel = which == b
        rows.append((float(edges[b]), float(edges[b + 1]), int(sel.sum()),
                     float(np.asarray(correct)[ok][sel].mean()) if sel.any() else float("nan")))
    return rows
