"""Immutable labeled graph, text-file ingestion and neighbourhood queries."""

from __future__ import annotations

import logging
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)

UNLABELED = -1


class GraphFormatError(ValueError):
    """Raised for malformed graph, label or feature files."""


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Undirected simple graph on nodes ``0..num_nodes-1``.

    ``edges`` is an ``(m, 2)`` int array with ``u < v`` in every row, sorted
    lexicographically. ``labels`` uses ``-1`` for unlabeled nodes.
    ``features`` is ``(num_nodes, d)`` or ``None``.
    """

    num_nodes: int
    edges: np.ndarray
    labels: np.ndarray | None = None
    features: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.num_nodes)
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        if np.any(e[:, 0] > e[:, 1]):
            raise ValueError("edges must be stored with u < v")
        if len(e) and len(np.unique(e[:, 0] * n + e[:, 1])) != len(e):
            raise ValueError("duplicate edges")
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
        e.setflags(write=False)
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", e)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.shape != (n,):
                raise ValueError(f"labels must have shape ({n},)")
            if np.any(y < UNLABELED):
                raise ValueError("labels must be >= 0 or -1 for unlabeled")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)
        if self.features is not None:
            x = np.asarray(self.features, dtype=np.float64)
            if x.ndim != 2 or x.shape[0] != n:
                raise ValueError(f"features must have shape ({n}, d)")
            x.setflags(write=False)
            object.__setattr__(self, "features", x)

    @classmethod
    def from_edges(cls, edges, num_nodes=None, labels=None, features=None):
        """Build a graph from arbitrary (possibly directed, duplicated) pairs."""
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                       dtype=np.int64).reshape(-1, 2)
        if len(e) and e.min() < 0:
            raise ValueError("negative node id")
        if num_nodes is None:
            num_nodes = int(e.max()) + 1 if len(e) else 0
            for extra in (labels, features):
                if extra is not None:
                    num_nodes = max(num_nodes, len(extra))
        loops = e[:, 0] == e[:, 1]
        if loops.any():
            log.warning("dropping %d self-loop(s)", int(loops.sum()))
            e = e[~loops]
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0) if len(e) else e
        return cls(num_nodes, e, labels, features)

    # -- derived structure -------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_classes(self) -> int:
        if self.labels is None or not np.any(self.labels >= 0):
            return 0
        return int(self.labels.max()) + 1

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency in CSR form."""
        n = self.num_nodes
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(u))
        a = sp.csr_matrix((data, (np.r_[u, v], np.r_[v, u])), shape=(n, n))
        a.sort_indices()
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.diff(self.adjacency.indptr).astype(np.int64)
        d.setflags(write=False)
        return d

    def neighbors(self, u: int) -> np.ndarray:
        self._check(u)
        a = self.adjacency
        return a.indices[a.indptr[u]:a.indptr[u + 1]]

    def _check(self, u):
        if not 0 <= u < self.num_nodes:
            raise IndexError(f"node {u} out of range for graph with {self.num_nodes} nodes")

    def __eq__(self, other):
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and np.array_equal(self.edges, other.edges)
                and _opt_equal(self.labels, other.labels)
                and _opt_equal(self.features, other.features))

    __hash__ = None

    def with_labels(self, labels) -> LabeledGraph:
        return LabeledGraph(self.num_nodes, self.edges, labels, self.features)

    def with_features(self, features) -> LabeledGraph:
        return LabeledGraph(self.num_nodes, self.edges, self.labels, features)

    def permute(self, perm) -> LabeledGraph:
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.argsort(perm)
        e = np.sort(perm[self.edges], axis=1)
        labels = None if self.labels is None else self.labels[inv]
        feats = None if self.features is None else self.features[inv]
        return LabeledGraph(self.num_nodes, e, labels, feats)


def _opt_equal(a, b):
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and np.array_equal(a, b)


# -- queries ---------------------------------------------------------------


@dataclass(frozen=True)
class HopRing:
    center: int
    tau: int
    members: frozenset


def degree(g: LabeledGraph, u: int) -> int:
    g._check(u)
    return int(g.degrees[u])


def hop_rings(g: LabeledGraph, u: int, max_tau: int | None = None) -> list[list[int]]:
    """BFS shells around ``u``: ``rings[t]`` holds the nodes at distance ``t``.

    The list stops at the last non-empty shell or at ``max_tau``.
    """
    g._check(u)
    a = g.adjacency
    indptr, indices = a.indptr, a.indices
    dist = {u: 0}
    rings = [[u]]
    frontier = [u]
    while frontier and (max_tau is None or len(rings) <= max_tau):
        nxt = []
        for x in frontier:
            for y in indices[indptr[x]:indptr[x + 1]]:
                y = int(y)
                if y not in dist:
                    dist[y] = len(rings)
                    nxt.append(y)
        if not nxt:
            break
        rings.append(nxt)
        frontier = nxt
    return rings


def hop_ring(g: LabeledGraph, u: int, tau: int) -> HopRing:
    if tau < 0:
        raise ValueError("tau must be >= 0")
    rings = hop_rings(g, u, tau)
    members = rings[tau] if tau < len(rings) else []
    return HopRing(u, tau, frozenset(members))


def connected_component(g: LabeledGraph, u: int) -> set[int]:
    g._check(u)
    a = g.adjacency
    seen = {u}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        for y in a.indices[a.indptr[x]:a.indptr[x + 1]]:
            y = int(y)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def component_labels(g: LabeledGraph) -> np.ndarray:
    """Component id for every node."""
    _, comp = connected_components(g.adjacency, directed=False)
    return comp


# -- file formats ----------------------------------------------------------


def _rows(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            yield lineno, s.split()


def _node_id(tok, path, lineno):
    try:
        v = int(tok)
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: invalid node id {tok!r}") from None
    if v < 0:
        raise GraphFormatError(f"{path}:{lineno}: negative node id {v}")
    return v


def _declared_num_nodes(path) -> int:
    with open(path) as fh:
        for line in fh:
            m = re.match(r"#\s*num_nodes\s+(\d+)", line)
            if m:
                return int(m.group(1))
    return 0


def read_edge_list(path) -> np.ndarray:
    pairs = []
    for lineno, toks in _rows(path):
        if len(toks) < 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 'u v', got {' '.join(toks)!r}")
        pairs.append((_node_id(toks[0], path, lineno), _node_id(toks[1], path, lineno)))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def read_labels(path) -> dict[int, int]:
    out = {}
    for lineno, toks in _rows(path):
        if len(toks) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 'u label', got {' '.join(toks)!r}")
        u = _node_id(toks[0], path, lineno)
        try:
            out[u] = int(toks[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: invalid label {toks[1]!r}") from None
        if out[u] < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative label")
    return out


def read_features(path) -> dict[int, np.ndarray]:
    out = {}
    dim = None
    for lineno, toks in _rows(path):
        u = _node_id(toks[0], path, lineno)
        try:
            row = np.array([float(t) for t in toks[1:]])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-numeric feature value") from None
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise GraphFormatError(f"{path}:{lineno}: expected {dim} features, got {len(row)}")
        out[u] = row
    return out


def load_graph(edge_path, label_path=None, feature_path=None) -> LabeledGraph:
    """Read an edge list plus optional label and feature files.

    Directed input is symmetrised, duplicates and self-loops dropped. Node ids
    that only appear in the label or feature file extend the node set.
    """
    pairs = read_edge_list(edge_path)
    n = max(int(pairs.max()) + 1 if len(pairs) else 0, _declared_num_nodes(edge_path))
    lab = read_labels(label_path) if label_path else {}
    feat = read_features(feature_path) if feature_path else {}
    for d in (lab, feat):
        if d:
            n = max(n, max(d) + 1)
    labels = None
    if label_path:
        labels = np.full(n, UNLABELED, dtype=np.int64)
        for u, y in lab.items():
            labels[u] = y
    features = None
    if feature_path:
        dim = len(next(iter(feat.values()))) if feat else 0
        features = np.zeros((n, dim))
        for u, row in feat.items():
            features[u] = row
    return LabeledGraph.from_edges(pairs, n, labels, features)


def write_graph(g: LabeledGraph, edge_path, label_path=None, feature_path=None):
    """Inverse of :func:`load_graph`.

    Isolated nodes survive the round trip only through the label or feature
    file, so ``num_nodes`` is recorded in a comment line as well.
    """
    with open(edge_path, "w") as fh:
        fh.write(f"# num_nodes {g.num_nodes}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")
    if label_path is not None and g.labels is not None:
        with open(label_path, "w") as fh:
            for u, y in enumerate(g.labels):
                if y >= 0:
                    fh.write(f"{u} {y}\n")
    if feature_path is not None and g.features is not None:
        with open(feature_path, "w") as fh:
            for u, row in enumerate(g.features):
                fh.write(f"{u} " + " ".join(repr(float(x)) for x in row) + "\n")


def file_digest(path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(Path(path), "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
