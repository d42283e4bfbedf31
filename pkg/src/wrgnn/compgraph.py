"""Multi-relational computation graph built from structural distances and proximity.

Relations ``"0" .. str(T)`` join structurally similar node pairs with weight
``exp(-f_tau)``; relation ``"p"`` copies the original edges with weight 1.
Every undirected edge is stored as two directed copies.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .graph import GraphFormatError, LabeledGraph
from .structdist import EXACT_DTW_BELOW, FASTDTW_RADIUS, DegreeSequences, structural_distances

PROXIMITY = "p"


@dataclass(frozen=True)
class Relation:
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return len(self.src)


@dataclass(frozen=True, eq=False)
class ComputationGraph:
    num_nodes: int
    T: int
    relations: dict            # name -> Relation, in canonical order
    meta: dict = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.relations)

    @property
    def structural(self) -> list[str]:
        return [r for r in self.relations if r != PROXIMITY]

    def num_edges(self, rel=None) -> int:
        if rel is not None:
            return len(self.relations[rel])
        return sum(len(r) for r in self.relations.values())

    def subset(self, names) -> ComputationGraph:
        """Keep only the named relations (ablations)."""
        keep = {k: v for k, v in self.relations.items() if k in set(names)}
        return ComputationGraph(self.num_nodes, self.T, keep, dict(self.meta))

    def select(self, which: str) -> ComputationGraph:
        if which == "all":
            return self
        if which == "proximity":
            return self.subset([PROXIMITY])
        if which == "structure":
            return self.subset(self.structural)
        raise ValueError(f"unknown relation selection {which!r}")

    def adjacency(self, rel: str) -> sp.csr_matrix:
        r = self.relations[rel]
        n = self.num_nodes
        return sp.csr_matrix((r.weight, (r.src, r.dst)), shape=(n, n))

    def union_adjacency(self) -> sp.csr_matrix:
        """All relations collapsed into one weighted, symmetric adjacency."""
        n = self.num_nodes
        out = sp.csr_matrix((n, n))
        for name in self.relations:
            out = out + self.adjacency(name)
        return out

    def permute(self, perm) -> ComputationGraph:
        perm = np.asarray(perm)
        rels = {k: _canonical(perm[r.src], perm[r.dst], r.weight) for k, r in self.relations.items()}
        return ComputationGraph(self.num_nodes, self.T, rels, dict(self.meta))

    def __eq__(self, other):
        if not isinstance(other, ComputationGraph):
            return NotImplemented
        if (self.num_nodes, self.T, self.names) != (other.num_nodes, other.T, other.names):
            return False
        for k, r in self.relations.items():
            o = other.relations[k]
            if not (np.array_equal(r.src, o.src) and np.array_equal(r.dst, o.dst)
                    and np.array_equal(r.weight, o.weight)):
                return False
        return True

    __hash__ = None


def _canonical(src, dst, weight) -> Relation:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    weight = np.asarray(weight, dtype=np.float64)
    order = np.lexsort((dst, src))
    return Relation(src[order], dst[order], weight[order])


def _symmetric(pairs, weights) -> Relation:
    if not pairs:
        return _canonical([], [], [])
    p = np.asarray(pairs, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    return _canonical(np.r_[p[:, 0], p[:, 1]], np.r_[p[:, 1], p[:, 0]], np.r_[w, w])


def _assemble(g, T, pair_rows, meta, weight_floor):
    buckets = [([], []) for _ in range(T + 1)]
    for row in pair_rows:
        u, v = row.pair
        for tau, f in row.defined():
            w = math.exp(-f)
            if w > 0.0 and w >= weight_floor:
                buckets[tau][0].append((u, v))
                buckets[tau][1].append(w)
    rels = {str(t): _symmetric(*buckets[t]) for t in range(T + 1)}
    e = g.edges
    rels[PROXIMITY] = _canonical(np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]],
                                 np.ones(2 * len(e)))
    return ComputationGraph(g.num_nodes, T, rels, meta)


def _pair_rows(g, pairs, T, exact_below, radius):
    seqs = DegreeSequences(g, T)
    return [structural_distances(g, p, T, seqs, exact_below, radius) for p in pairs]


def build_naive(g: LabeledGraph, T: int, weight_floor: float = 0.0,
                exact_below: int = EXACT_DTW_BELOW, radius: int = FASTDTW_RADIUS) -> ComputationGraph:
    """Structural edges for every unordered node pair and every defined level."""
    if T < 0:
        raise ValueError("T must be >= 0")
    pairs = list(combinations(range(g.num_nodes), 2))
    rows = _pair_rows(g, pairs, T, exact_below, radius)
    meta = {"T": T, "mode": "naive", "budget": None, "floor": weight_floor}
    return _assemble(g, T, rows, meta, weight_floor)


def default_budget(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def candidate_pairs(g: LabeledGraph, budget_per_side: int) -> list[tuple[int, int]]:
    """Degree-sorted candidate pairs, ``budget_per_side`` positions each way.

    Nodes are ordered by ``(degree, id)``; each node's own slot is located by
    binary search and its neighbours in that order become candidates. Pairs
    are returned once, as ``(min, max)``, sorted.
    """
    if budget_per_side < 1:
        raise ValueError("budget_per_side must be >= 1")
    deg = g.degrees
    order = sorted(range(g.num_nodes), key=lambda u: (int(deg[u]), u))
    keys = [(int(deg[u]), u) for u in order]
    out = set()
    for u in range(g.num_nodes):
        pos = bisect.bisect_left(keys, (int(deg[u]), u))
        lo, hi = max(0, pos - budget_per_side), min(len(order), pos + budget_per_side + 1)
        for k in range(lo, hi):
            v = order[k]
            if v != u:
                out.add((min(u, v), max(u, v)))
    return sorted(out)


def build_practical(g: LabeledGraph, T: int, budget_per_side: int | None = None,
                    weight_floor: float = 0.0, exact_below: int = EXACT_DTW_BELOW,
                    radius: int = FASTDTW_RADIUS) -> ComputationGraph:
    """Like :func:`build_naive` but only for degree-sorted candidate pairs."""
    if T < 0:
        raise ValueError("T must be >= 0")
    if budget_per_side is None:
        budget_per_side = default_budget(g.num_nodes)
    pairs = candidate_pairs(g, budget_per_side)
    rows = _pair_rows(g, pairs, T, exact_below, radius)
    meta = {"T": T, "mode": "practical", "budget": budget_per_side, "floor": weight_floor}
    return _assemble(g, T, rows, meta, weight_floor)


# -- serialisation ---------------------------------------------------------------

HEADER = "src\tdst\trel\tweight"


def serialize(c: ComputationGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# num_nodes={c.num_nodes}\n")
        fh.write(f"# T={c.T}\n")
        for key in ("mode", "budget", "floor"):
            if key in c.meta:
                fh.write(f"# {key}={c.meta[key]}\n")
        fh.write(HEADER + "\n")
        for name, r in c.relations.items():
            for s, d, w in zip(r.src.tolist(), r.dst.tolist(), r.weight.tolist()):
                fh.write(f"{s}\t{d}\t{name}\t{w!r}\n")


def _meta_value(v):
    if v == "None":
        return None
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def deserialize(path) -> ComputationGraph:
    meta = {}
    rows: dict[str, tuple[list, list, list]] = {}
    seen_header = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.rstrip("\n")
            if not s.strip():
                continue
            if s.startswith("#"):
                key, _, val = s[1:].strip().partition("=")
                meta[key.strip()] = _meta_value(val.strip())
                continue
            if not seen_header:
                if s.strip() != HEADER:
                    raise GraphFormatError(f"{path}:{lineno}: expected header {HEADER!r}")
                seen_header = True
                continue
            toks = s.split("\t")
            if len(toks) != 4:
                raise GraphFormatError(f"{path}:{lineno}: expected 4 tab-separated fields")
            try:
                src, dst, w = int(toks[0]), int(toks[1]), float(toks[3])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: malformed row {s!r}") from None
            rel = toks[2]
            if rel != PROXIMITY and not rel.isdigit():
                raise GraphFormatError(f"{path}:{lineno}: unknown relation {rel!r}")
            if not 0.0 < w <= 1.0:
                raise GraphFormatError(f"{path}:{lineno}: weight {w} outside (0, 1]")
            bucket = rows.setdefault(rel, ([], [], []))
            bucket[0].append(src)
            bucket[1].append(dst)
            bucket[2].append(w)
    if not seen_header:
        raise GraphFormatError(f"{path}: missing header {HEADER!r}")
    T = int(meta.pop("T", max((int(r) for r in rows if r != PROXIMITY), default=0)))
    n = meta.pop("num_nodes", None)
    if n is None:
        n = 1 + max((max(b[0] + b[1], default=-1) for b in rows.values()), default=-1)
    names = [str(t) for t in range(T + 1)] + [PROXIMITY]
    rels = {k: _canonical(*rows.get(k, ([], [], []))) for k in names}
    return ComputationGraph(int(n), T, rels, meta)
