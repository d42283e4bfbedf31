"""Weighted relational message passing (WRGCN / WRGAT) in plain numpy.

Layer ``k`` computes, for every node ``u``::

    m_u = sum_rel sum_{v in N_rel(u)} w_rel(u, v) * alpha_rel(u, v) * (h_v @ W_rel)
    h_u <- normalize(relu(h_u @ W_self + m_u @ W_neig))

with ``alpha`` fixed to 1 (WRGCN) or a per-relation softmax over
``leaky_relu(a_rel . [h_u W_rel || h_v W_rel])`` (WRGAT). A two-layer MLP
maps the final states to class logits.

Gradients are derived by hand; ``tests/test_gradients.py`` checks every
parameter against central finite differences.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .compgraph import ComputationGraph


class NumericalError(RuntimeError):
    """Training produced a non-finite loss or parameter."""


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named consumer of randomness."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


@dataclass
class ModelConfig:
    in_dim: int
    num_classes: int
    relations: list
    hidden: int = 32
    mlp_hidden: int = 32
    num_layers: int = 2
    attention: bool = True
    shared_attention: bool = False
    dropout: float = 0.5
    negative_slope: float = 0.2

    @property
    def variant(self) -> str:
        return "wrgat" if self.attention else "wrgcn"


# -- graph plumbing ---------------------------------------------------------


class _Rel:
    """Edge arrays of one relation, sorted by receiving node."""

    def __init__(self, n, src, dst, weight):
        self.n = n
        self.u = src
        self.v = dst
        self.w = weight
        counts = np.bincount(src, minlength=n)
        self.indptr = np.r_[0, np.cumsum(counts)]
        self.starts = self.indptr[:-1][counts > 0]
        self.seg = np.repeat(np.arange(len(self.starts)), counts[counts > 0])

    def matrix(self, coef):
        return sp.csr_matrix((coef, self.v, self.indptr), shape=(self.n, self.n))

    def softmax(self, s):
        mx = np.maximum.reduceat(s, self.starts)
        ex = np.exp(s - mx[self.seg])
        return ex / np.add.reduceat(ex, self.starts)[self.seg]

    def seg_sum(self, x):
        return np.add.reduceat(x, self.starts)[self.seg]


def prepare(c: ComputationGraph) -> dict:
    """Per-relation edge arrays for the forward pass."""
    return {name: _Rel(c.num_nodes, r.src, r.dst, r.weight) for name, r in c.relations.items()
            if len(r)} | {name: None for name, r in c.relations.items() if not len(r)}


# -- the model ----------------------------------------------------------------------


@dataclass
class WrgnnModel:
    config: ModelConfig
    params: dict = field(default_factory=dict)

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0) -> WrgnnModel:
        rng = rng_stream(seed, "init")
        p = {}

        def uni(shape, fan_in):
            b = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-b, b, size=shape)

        d_in = config.in_dim
        h = config.hidden
        for k in range(config.num_layers):
            for rel in config.relations:
                p[f"{k}.W.{rel}"] = uni((d_in, h), d_in)
            p[f"{k}.W_self"] = uni((d_in, h), d_in)
            p[f"{k}.W_neig"] = uni((h, h), h)
            if config.attention:
                names = ["*"] if config.shared_attention else config.relations
                for rel in names:
                    p[f"{k}.a.{rel}"] = uni(2 * h, 2 * h)
            d_in = h
        p["head.W1"] = uni((h, config.mlp_hidden), h)
        p["head.b1"] = uni(config.mlp_hidden, h)
        p["head.W2"] = uni((config.mlp_hidden, config.num_classes), config.mlp_hidden)
        p["head.b2"] = uni(config.num_classes, config.mlp_hidden)
        return cls(config, p)

    def copy(self) -> WrgnnModel:
        return WrgnnModel(self.config, {k: v.copy() for k, v in self.params.items()})

    def _att(self, k, rel):
        key = f"{k}.a.*" if self.config.shared_attention else f"{k}.a.{rel}"
        return key, self.params[key]

    # -- forward -------------------------------------------------------------

    def _check_inputs(self, rels, x):
        if x.ndim != 2 or x.shape[1] != self.config.in_dim:
            raise ValueError(f"expected features of width {self.config.in_dim}, got {x.shape}")
        missing = [r for r in rels if f"0.W.{r}" not in self.params]
        if missing:
            raise ValueError(f"model has no parameters for relations {missing}")

    def _layer_forward(self, k, rels, h):
        cfg = self.config
        p = self.params
        n = h.shape[0]
        msg = np.zeros((n, cfg.hidden))
        per_rel = {}
        for rel, ra in rels.items():
            if ra is None:
                continue
            z = h @ p[f"{k}.W.{rel}"]
            alpha = e = None
            if cfg.attention:
                _, a = self._att(k, rel)
                e = (z @ a[:cfg.hidden])[ra.u] + (z @ a[cfg.hidden:])[ra.v]
                s = np.where(e > 0, e, cfg.negative_slope * e)
                alpha = ra.softmax(s)
                coef = ra.w * alpha
            else:
                coef = ra.w
            mat = ra.matrix(coef)
            msg += mat @ z
            per_rel[rel] = (z, e, alpha, coef, mat)
        pre = h @ p[f"{k}.W_self"] + msg @ p[f"{k}.W_neig"]
        act = np.maximum(pre, 0.0)
        norm = np.linalg.norm(act, axis=1)
        safe = np.where(norm > 0, norm, 1.0)
        out = act / safe[:, None]
        return out, dict(h=h, msg=msg, pre=pre, out=out, norm=norm, per_rel=per_rel)

    def _forward(self, rels, x, masks=None):
        h = x
        caches = []
        for k in range(self.config.num_layers):
            h, cache = self._layer_forward(k, rels, h)
            if masks is not None:
                cache["drop"] = masks[k]
                h = h * masks[k]
            caches.append(cache)
        p = self.params
        pre1 = h @ p["head.W1"] + p["head.b1"]
        hid = np.maximum(pre1, 0.0)
        logits = hid @ p["head.W2"] + p["head.b2"]
        caches.append(dict(z=h, pre1=pre1, hid=hid))
        return logits, caches

    def logits(self, c, x) -> np.ndarray:
        rels = c if isinstance(c, dict) else prepare(c)
        x = np.asarray(x, dtype=float)
        self._check_inputs(rels, x)
        return self._forward(rels, x)[0]

    def forward(self, c, x) -> np.ndarray:
        """Class probabilities for every node (evaluation mode, no dropout)."""
        return softmax(self.logits(c, x))

    def hidden_states(self, c, x) -> list[np.ndarray]:
        rels = c if isinstance(c, dict) else prepare(c)
        h = np.asarray(x, dtype=float)
        out = [h]
        for k in range(self.config.num_layers):
            h, _ = self._layer_forward(k, rels, h)
            out.append(h)
        return out

    # -- loss and gradients ----------------------------------------------------

    def dropout_masks(self, n, rng):
        rate = self.config.dropout
        if rate <= 0:
            return None
        keep = 1.0 - rate
        return [(rng.random((n, self.config.hidden)) < keep) / keep
                for _ in range(self.config.num_layers)]

    def loss_and_gradients(self, c, x, labels, mask, weight_decay: float = 0.0, masks=None):
        """Mean cross-entropy over ``mask`` plus ``weight_decay/2 * ||theta||^2``."""
        rels = c if isinstance(c, dict) else prepare(c)
        x = np.asarray(x, dtype=float)
        self._check_inputs(rels, x)
        idx = np.flatnonzero(mask)
        if len(idx) == 0:
            raise ValueError("empty training mask")
        logits, caches = self._forward(rels, x, masks)
        prob = softmax(logits)
        y = np.asarray(labels)[idx]
        data_loss = -np.mean(np.log(np.maximum(prob[idx, y], 1e-300)))
        reg = 0.5 * weight_decay * sum(float(np.sum(v * v)) for v in self.params.values())

        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        dlogits = np.zeros_like(prob)
        dlogits[idx] = prob[idx]
        dlogits[idx, y] -= 1.0
        dlogits /= len(idx)
        dh = self._head_backward(caches[-1], dlogits, grads)
        for k in reversed(range(self.config.num_layers)):
            cache = caches[k]
            if "drop" in cache:
                dh = dh * cache["drop"]
            dh = self._layer_backward(k, rels, cache, dh, grads)
        if weight_decay:
            for key, v in self.params.items():
                grads[key] += weight_decay * v
        return data_loss + reg, grads

    def _head_backward(self, cache, dlogits, grads):
        p = self.params
        grads["head.W2"] += cache["hid"].T @ dlogits
        grads["head.b2"] += dlogits.sum(axis=0)
        dpre1 = (dlogits @ p["head.W2"].T) * (cache["pre1"] > 0)
        grads["head.W1"] += cache["z"].T @ dpre1
        grads["head.b1"] += dpre1.sum(axis=0)
        return dpre1 @ p["head.W1"].T

    def _layer_backward(self, k, rels, cache, dout, grads):
        cfg = self.config
        p = self.params
        out, norm = cache["out"], cache["norm"]
        nz = norm > 0
        dact = np.zeros_like(dout)
        proj = np.sum(dout * out, axis=1, keepdims=True)
        dact[nz] = (dout[nz] - out[nz] * proj[nz]) / norm[nz, None]
        dpre = dact * (cache["pre"] > 0)
        h = cache["h"]
        grads[f"{k}.W_self"] += h.T @ dpre
        grads[f"{k}.W_neig"] += cache["msg"].T @ dpre
        dh = dpre @ p[f"{k}.W_self"].T
        dmsg = dpre @ p[f"{k}.W_neig"].T
        for rel, (z, e, alpha, coef, mat) in cache["per_rel"].items():
            ra = rels[rel]
            dz = mat.T @ dmsg
            if cfg.attention:
                akey, a = self._att(k, rel)
                dcoef = np.sum(dmsg[ra.u] * z[ra.v], axis=1)
                dalpha = dcoef * ra.w
                ds = alpha * (dalpha - ra.seg_sum(alpha * dalpha))
                de = ds * np.where(e > 0, 1.0, cfg.negative_slope)
                hd = cfg.hidden
                de_u = np.bincount(ra.u, weights=de, minlength=ra.n)
                de_v = np.bincount(ra.v, weights=de, minlength=ra.n)
                grads[akey][:hd] += z.T @ de_u
                grads[akey][hd:] += z.T @ de_v
                dz += np.outer(de_u, a[:hd]) + np.outer(de_v, a[hd:])
            grads[f"{k}.W.{rel}"] += h.T @ dz
            dh += dz @ p[f"{k}.W.{rel}"].T
        return dh


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=1, keepdims=True)


# -- node-level views of one layer ---------------------------------------------------


def attention_coefficients(model: WrgnnModel, layer: int, rel: str, u: int, h, c):
    """``(neighbours, alpha)`` of node ``u`` under one relation.

    Empty arrays when ``u`` has no neighbours under ``rel``.
    """
    r = c.relations[rel]
    lo, hi = np.searchsorted(r.src, [u, u + 1])
    nb = r.dst[lo:hi]
    if len(nb) == 0:
        return nb, np.zeros(0)
    cfg = model.config
    z = np.asarray(h) @ model.params[f"{layer}.W.{rel}"]
    if not cfg.attention:
        return nb, np.ones(len(nb))
    _, a = model._att(layer, rel)
    e = z[u] @ a[:cfg.hidden] + z[nb] @ a[cfg.hidden:]
    s = np.where(e > 0, e, cfg.negative_slope * e)
    s = np.exp(s - s.max())
    return nb, s / s.sum()


def aggregate(model: WrgnnModel, layer: int, u: int, h, c, attention: bool | None = None):
    """Message vector of node ``u``; ``attention=False`` forces alpha = 1."""
    attention = model.config.attention if attention is None else attention
    h = np.asarray(h, dtype=float)
    msg = np.zeros(model.config.hidden)
    for rel, r in c.relations.items():
        lo, hi = np.searchsorted(r.src, [u, u + 1])
        if hi == lo:
            continue
        nb, w = r.dst[lo:hi], r.weight[lo:hi]
        z = h[nb] @ model.params[f"{layer}.W.{rel}"]
        alpha = attention_coefficients(model, layer, rel, u, h, c)[1] if attention else 1.0
        msg += ((w * alpha)[:, None] * z).sum(axis=0)
    return msg


def layer_update(model: WrgnnModel, layer: int, h_u, m_u):
    p = model.params
    act = np.maximum(np.asarray(h_u) @ p[f"{layer}.W_self"] + np.asarray(m_u) @ p[f"{layer}.W_neig"], 0.0)
    nrm = np.linalg.norm(act)
    return act / nrm if nrm > 0 else act
