"""Global and node-level assortativity of labeled graphs.

Node-level mixing follows the random-walk formulation: a mixing matrix is
accumulated from edge traversal probabilities ``w(i) * A_ij / d_i`` where
``w`` is a distribution over start nodes. With the stationary distribution
this gives the ordinary (global) mixing matrix; with a restart walk centred
on a node ``l`` it gives the local mixing around ``l``.

Every routine that only needs an adjacency accepts any symmetric,
non-negative sparse matrix, so the same code measures weighted graphs
(e.g. the collapsed computation graph).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import digamma

from .graph import LabeledGraph

HIST_BINS = 41


class UndefinedValue(ValueError):
    """A statistic is mathematically undefined for the given node or graph."""


@dataclass(frozen=True)
class MixingMatrix:
    entries: np.ndarray

    @property
    def a(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def b(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def symmetrized(self) -> MixingMatrix:
        return MixingMatrix(0.5 * (self.entries + self.entries.T))


@dataclass(frozen=True)
class NodeWeightVector:
    center: int
    weights: np.ndarray


@dataclass
class AssortativityProfile:
    r_local: np.ndarray        # NaN where undefined or unlabeled
    defined: np.ndarray
    r_global: float
    bin_edges: np.ndarray
    counts: np.ndarray


# -- helpers ---------------------------------------------------------------


def _adj_labels(g):
    if isinstance(g, LabeledGraph):
        if g.labels is None:
            raise UndefinedValue("graph has no labels")
        return g.adjacency, g.labels, g.num_classes
    adj, labels = g
    labels = np.asarray(labels)
    return sp.csr_matrix(adj), labels, int(labels.max()) + 1


def transition_matrix(adj) -> sp.csr_matrix:
    """Row-normalised adjacency; rows of isolated nodes stay zero."""
    adj = sp.csr_matrix(adj, dtype=np.float64)
    d = np.asarray(adj.sum(axis=1)).ravel()
    inv = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
    return sp.csr_matrix(sp.diags(inv) @ adj)


def _edge_mixing(adj, labels, num_classes, row_mass):
    """Sum ``row_mass[i] * adj_ij`` into label cells, labeled endpoints only."""
    coo = sp.coo_matrix(adj)
    keep = (labels[coo.row] >= 0) & (labels[coo.col] >= 0)
    i, j = coo.row[keep], coo.col[keep]
    vals = row_mass[i] * coo.data[keep]
    m = np.zeros((num_classes, num_classes))
    np.add.at(m, (labels[i], labels[j]), vals)
    return m


# -- global ------------------------------------------------------------------


def global_mixing_matrix(g) -> MixingMatrix:
    """Fraction of edge ends joining label ``g`` to label ``h``.

    Edges with an unlabeled endpoint are ignored.
    """
    adj, labels, c = _adj_labels(g)
    m = _edge_mixing(adj, labels, c, np.ones(adj.shape[0]))
    total = m.sum()
    if total <= 0:
        raise UndefinedValue("empty mixing matrix: no edge joins two labeled nodes")
    return MixingMatrix(m / total)


def global_assortativity(m: MixingMatrix) -> float:
    a, b = m.a, m.b
    ab = float(a @ b)
    if 1.0 - ab <= 1e-12:
        raise UndefinedValue("assortativity undefined: only one label carries edges")
    return (float(np.trace(m.entries)) - ab) / (1.0 - ab)


# -- node weight distributions -------------------------------------------------


def _component_stationary(adj, l):
    comp = component_labels_adj(adj)
    mask = comp == comp[l]
    d = np.asarray(adj.sum(axis=1)).ravel() * mask
    if d.sum() <= 0:
        raise ValueError(f"node {l} lies in a component without edges")
    return d / d.sum()


def component_labels_adj(adj):
    from scipy.sparse.csgraph import connected_components

    return connected_components(adj, directed=False)[1]


def ppr_weights(g, l: int, alpha: float, tol: float = 1e-10,
                max_iter: int = 1_000_000) -> NodeWeightVector:
    """Personalised PageRank with restart probability ``1 - alpha`` at ``l``.

    Solved by power iteration on ``w = (1-alpha) e_l + alpha w P`` until the
    L1 change drops below ``tol``. ``alpha = 1`` returns the stationary
    distribution of ``l``'s component directly, since the iteration need not
    converge on bipartite components.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    adj = g.adjacency if isinstance(g, LabeledGraph) else sp.csr_matrix(g)
    n = adj.shape[0]
    if not 0 <= l < n:
        raise IndexError(f"node {l} out of range")
    e = np.zeros(n)
    e[l] = 1.0
    if alpha == 0.0:
        return NodeWeightVector(l, e)
    if adj[l].nnz == 0:
        raise ValueError(f"node {l} has no edges; restart walk undefined for alpha > 0")
    if alpha == 1.0:
        return NodeWeightVector(l, _component_stationary(adj, l))
    pt = transition_matrix(adj).T.tocsr()
    w = e.copy()
    for _ in range(max_iter):
        nxt = (1.0 - alpha) * e + alpha * (pt @ w)
        if np.abs(nxt - w).sum() < tol:
            w = nxt
            break
        w = nxt
    else:
        raise RuntimeError("personalised PageRank did not converge")
    return NodeWeightVector(l, w)


def totalrank_terms(tol: float) -> int:
    """Smallest ``K`` whose series tail ``1/(K+2)`` is below ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    k = max(0, math.floor(1.0 / tol) - 2)
    while 1.0 / (k + 2) >= tol:
        k += 1
    while k > 0 and 1.0 / (k + 1) < tol:
        k -= 1
    return k


def _coef_sum(lo, hi, parity=None):
    """Sum of ``1/((k+1)(k+2))`` for ``lo <= k <= hi`` (optionally one parity)."""
    if hi < lo:
        return 0.0
    if parity is None:
        return 1.0 / (lo + 1) - 1.0 / (hi + 2)
    start = lo if lo % 2 == parity else lo + 1
    if start > hi:
        return 0.0
    m = (hi - start) // 2 + 1
    if m <= 4096:
        k = np.arange(start, start + 2 * m, 2, dtype=np.float64)
        return float(np.sum(1.0 / (k + 1) - 1.0 / (k + 2)))
    # sum_j 1/(a + 2j) over m terms = (psi(a/2 + m) - psi(a/2)) / 2
    a, b = (start + 1) / 2, (start + 2) / 2
    return float(0.5 * ((digamma(a + m) - digamma(b + m)) - (digamma(a) - digamma(b))))


def totalrank_matrix(adj, tol: float = 1e-6, centers=None, chunk: int = 512,
                     settle: float = 1e-15) -> np.ndarray:
    """TotalRank vectors for many centres at once; row ``i`` is for ``centers[i]``.

    Evaluates ``sum_k e_l P^k / ((k+1)(k+2))`` for ``k = 0..K``. Once the walk
    distribution has settled onto its limit cycle (period 1 or 2, change
    below ``settle``) the remaining coefficients up to ``K`` are added in
    closed form instead of iterating further. Rows are renormalised to 1.
    """
    adj = sp.csr_matrix(adj, dtype=np.float64)
    n = adj.shape[0]
    big_k = totalrank_terms(tol)
    centers = np.arange(n) if centers is None else np.asarray(centers, dtype=np.int64)
    pt = transition_matrix(adj).T.tocsr()
    out = np.empty((len(centers), n))
    for s in range(0, len(centers), chunk):
        idx = centers[s:s + chunk]
        v = np.zeros((n, len(idx)))        # column c = e_l P^k for centre idx[c]
        v[idx, np.arange(len(idx))] = 1.0
        acc = 0.5 * v
        prev, prev2 = None, None
        k = 0
        while k < big_k:
            k += 1
            prev2, prev = prev, v
            v = pt @ v
            acc += v / ((k + 1) * (k + 2))
            if prev2 is not None and np.abs(v - prev2).sum(axis=0).max() < settle:
                # v_{k+2j} == v, v_{k+2j+1} == prev from here on
                acc += v * _coef_sum(k + 1, big_k, parity=k % 2)
                acc += prev * _coef_sum(k + 1, big_k, parity=(k + 1) % 2)
                break
        total = acc.sum(axis=0)
        out[s:s + len(idx)] = (acc / total).T
    return out


def totalrank_weights(g, l: int, tol: float = 1e-6) -> NodeWeightVector:
    """Restart-walk distribution averaged uniformly over ``alpha`` in [0, 1]."""
    adj = g.adjacency if isinstance(g, LabeledGraph) else g
    if not 0 <= l < adj.shape[0]:
        raise IndexError(f"node {l} out of range")
    return NodeWeightVector(l, totalrank_matrix(adj, tol, centers=[l])[0])


# -- local mixing -----------------------------------------------------------------


def local_mixing_matrix(g, w, symmetrize: bool = False) -> MixingMatrix:
    """Mixing matrix with edge ends weighted by ``w(i) A_ij / d_i``.

    Mass on edges touching unlabeled nodes is dropped and the rest
    renormalised to sum to one.
    """
    adj, labels, c = _adj_labels(g)
    weights = w.weights if isinstance(w, NodeWeightVector) else np.asarray(w)
    d = np.asarray(adj.sum(axis=1)).ravel()
    row_mass = np.divide(weights, d, out=np.zeros_like(weights, dtype=float), where=d > 0)
    m = _edge_mixing(adj, labels, c, row_mass)
    total = m.sum()
    if total <= 1e-300:
        raise UndefinedValue("no labeled edge mass around this node")
    mm = MixingMatrix(m / total)
    return mm.symmetrized() if symmetrize else mm


def _local_r(m_local: MixingMatrix, a):
    denom = 1.0 - float(a @ a)
    if denom <= 1e-12:
        raise UndefinedValue("assortativity undefined: single label")
    return (float(np.trace(m_local.entries)) - float(a @ a)) / denom


def local_assortativity(g, l: int, tol: float = 1e-6, weights=None) -> float:
    """Node-level assortativity of ``l``.

    ``weights`` defaults to the TotalRank distribution around ``l``; the
    label marginals always come from the global mixing matrix so that the
    stationary distribution reproduces the global coefficient exactly.
    """
    if weights is None:
        weights = totalrank_weights(g, l, tol)
    a = global_mixing_matrix(g).a
    return _local_r(local_mixing_matrix(g, weights, symmetrize=True), a)


def local_assortativity_all(g, tol: float = 1e-6, nodes=None):
    """``(r, r_global)`` with ``r[i]`` for every node (NaN where undefined)."""
    adj, labels, c = _adj_labels(g)
    n = adj.shape[0]
    nodes = np.arange(n) if nodes is None else np.asarray(nodes)
    gm = global_mixing_matrix((adj, labels))
    r_global = global_assortativity(gm)
    a = gm.a
    w = totalrank_matrix(adj, tol, centers=nodes)
    r = np.full(n, np.nan)
    for row, l in zip(w, nodes):
        try:
            r[l] = _local_r(local_mixing_matrix((adj, labels), row, symmetrize=True), a)
        except UndefinedValue:
            pass
    return r, r_global


# -- smoothness diagnostics -------------------------------------------------------


def label_smoothness(g: LabeledGraph, u: int) -> float:
    """Share of ``u``'s labeled neighbours carrying ``u``'s label."""
    nb = g.neighbors(u)
    if len(nb) == 0:
        raise UndefinedValue(f"node {u} has no neighbours")
    if g.labels is None or g.labels[u] < 0:
        raise UndefinedValue(f"node {u} is unlabeled")
    y = g.labels[nb]
    y = y[y >= 0]
    if len(y) == 0:
        raise UndefinedValue(f"node {u} has no labeled neighbours")
    return float(np.mean(y == g.labels[u]))


def feature_smoothness(g: LabeledGraph, u: int) -> float:
    """Squared distance between ``x_u`` and the mean neighbour feature."""
    nb = g.neighbors(u)
    if len(nb) == 0:
        raise UndefinedValue(f"node {u} has no neighbours")
    if g.features is None:
        raise UndefinedValue("graph has no features")
    diff = g.features[u] - g.features[nb].mean(axis=0)
    return float(diff @ diff)


def histogram(values, bins: int = HIST_BINS):
    """Fixed-width counts over [-1, 1]; values outside are clipped into the end bins."""
    vals = np.clip(np.asarray(values, dtype=float), -1.0, 1.0)
    return np.histogram(vals, bins=bins, range=(-1.0, 1.0))


def assortativity_profile(g, tol: float = 1e-6, bins: int = HIST_BINS) -> AssortativityProfile:
    """Local assortativity for every labeled node plus the global value."""
    adj, labels, _ = _adj_labels(g)
    r, r_global = local_assortativity_all(g, tol)
    r[labels < 0] = np.nan
    defined = ~np.isnan(r)
    counts, edges = histogram(r[defined], bins)
    return AssortativityProfile(r, defined, r_global, edges, counts)
