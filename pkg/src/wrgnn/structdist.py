"""Ordered degree sequences on hop rings and the cumulative structural distance.

Two nodes are compared ring by ring: the degrees found exactly ``tau`` hops
away are sorted in non-increasing order and the two sequences aligned by
dynamic time warping. Distances accumulate over ``tau`` so they can only
grow with depth.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .graph import LabeledGraph, hop_rings

log = logging.getLogger(__name__)

EXACT_DTW_BELOW = 64
FASTDTW_RADIUS = 1
MAX_SEQUENCE = 128


def element_cost(a: float, b: float) -> float:
    """Ratio cost between two degrees; zero for equal values."""
    hi, lo = (a, b) if a >= b else (b, a)
    return max(0.0, hi / max(1.0, lo) - 1.0)


def _cost_matrix(s1, s2):
    a = np.asarray(s1, dtype=float)[:, None]
    b = np.asarray(s2, dtype=float)[None, :]
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    return np.maximum(0.0, hi / np.maximum(1.0, lo) - 1.0)


def dtw_exact(s1, s2) -> float:
    """Full O(len1 * len2) dynamic program."""
    if len(s1) == 0 or len(s2) == 0:
        raise ValueError("DTW needs non-empty sequences")
    cost = _cost_matrix(s1, s2)
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        row, up = acc[i], acc[i - 1]
        c = cost[i - 1]
        # diagonal and vertical moves vectorise; horizontal needs a scan
        best = np.minimum(up[:-1], up[1:]) + c
        run = np.inf
        for j in range(1, m + 1):
            run = min(best[j - 1], run + c[j - 1])
            row[j] = run
    return float(acc[n, m])


def _dtw_window(s1, s2, window):
    """DP restricted to the cells in ``window``; returns cost and path."""
    n, m = len(s1), len(s2)
    cells = {}
    for i, j in sorted(window):
        c = element_cost(s1[i], s2[j])
        if i == 0 and j == 0:
            cells[(0, 0)] = (c, None)
            continue
        best, arg = math.inf, None
        for prev in ((i - 1, j - 1), (i - 1, j), (i, j - 1)):
            v = cells.get(prev)
            if v is not None and v[0] < best:
                best, arg = v[0], prev
        if arg is not None:
            cells[(i, j)] = (best + c, arg)
    path = []
    node = (n - 1, m - 1)
    while node is not None:
        path.append(node)
        node = cells[node][1]
    path.reverse()
    return cells[(n - 1, m - 1)][0], path


def _coarsen(s):
    return [(s[i] + s[i + 1]) / 2.0 for i in range(0, len(s) - len(s) % 2, 2)]


def _expand_window(path, n, m, radius):
    cells = set()
    for i, j in path:
        for a in range(-radius, radius + 1):
            for b in range(-radius, radius + 1):
                cells.add((i + a, j + b))
    window = set()
    for i, j in cells:
        for a in (0, 1):
            for b in (0, 1):
                x, y = 2 * i + a, 2 * j + b
                if 0 <= x < n and 0 <= y < m:
                    window.add((x, y))
    # keep the window connected so (0,0)->(n-1,m-1) stays reachable
    rows = {}
    for i, j in window:
        lo, hi = rows.get(i, (j, j))
        rows[i] = (min(lo, j), max(hi, j))
    out = set()
    prev_lo, prev_hi = 0, 0
    for i in range(n):
        lo, hi = rows.get(i, (prev_lo, prev_hi))
        lo = 0 if i == 0 else max(prev_lo, min(lo, prev_hi))
        hi = m - 1 if i == n - 1 else max(hi, prev_hi)
        out.update((i, j) for j in range(lo, hi + 1))
        prev_lo, prev_hi = lo, hi
    return out


def fastdtw(s1, s2, radius: int = FASTDTW_RADIUS) -> float:
    """Multi-resolution approximate DTW.

    Exact whenever both sequences are no longer than ``radius + 2``.
    """
    return _fastdtw(list(map(float, s1)), list(map(float, s2)), radius)[0]


def _fastdtw(s1, s2, radius):
    if len(s1) == 0 or len(s2) == 0:
        raise ValueError("DTW needs non-empty sequences")
    min_size = radius + 2
    if len(s1) <= min_size or len(s2) <= min_size:
        window = {(i, j) for i in range(len(s1)) for j in range(len(s2))}
        return _dtw_window(s1, s2, window)
    _, low_path = _fastdtw(_coarsen(s1), _coarsen(s2), radius)
    window = _expand_window(low_path, len(s1), len(s2), radius)
    return _dtw_window(s1, s2, window)


def dtw_cost(s1, s2, exact_below: int = EXACT_DTW_BELOW, radius: int = FASTDTW_RADIUS) -> float:
    """Alignment cost between two degree sequences.

    Sequences shorter than ``exact_below`` use the exact dynamic program,
    longer ones FastDTW with the given radius.
    """
    if len(s1) == 0 or len(s2) == 0:
        raise ValueError("DTW needs non-empty sequences")
    if len(s1) < exact_below and len(s2) < exact_below:
        return dtw_exact(s1, s2)
    return fastdtw(s1, s2, radius)


# -- degree sequences ---------------------------------------------------------


def degree_sequence(g: LabeledGraph, center: int, tau: int) -> list[int]:
    """Non-increasing degrees of the nodes exactly ``tau`` hops from ``center``."""
    rings = hop_rings(g, center, tau)
    if tau >= len(rings):
        return []
    return sorted((int(g.degrees[x]) for x in rings[tau]), reverse=True)


class DegreeSequences:
    """Per-node cache of ring degree sequences up to depth ``max_tau``."""

    def __init__(self, g: LabeledGraph, max_tau: int, max_len: int = MAX_SEQUENCE):
        self.g = g
        self.max_tau = max_tau
        self.max_len = max_len
        self._cache: dict[int, list[list[int]]] = {}

    def __call__(self, u: int) -> list[list[int]]:
        seqs = self._cache.get(u)
        if seqs is None:
            deg = self.g.degrees
            seqs = []
            for ring in hop_rings(self.g, u, self.max_tau):
                s = sorted((int(deg[x]) for x in ring), reverse=True)
                if len(s) > self.max_len:
                    log.debug("truncating ring of %d nodes around %d to %d", len(s), u, self.max_len)
                    s = s[: self.max_len]
                seqs.append(s)
            self._cache[u] = seqs
        return seqs


@dataclass(frozen=True)
class DistanceRow:
    """``f[tau]`` for ``tau = 0..T``; ``None`` once either ring is empty."""

    pair: tuple[int, int]
    f: tuple

    def defined(self):
        return [(t, v) for t, v in enumerate(self.f) if v is not None]


def structural_distances(g: LabeledGraph, pair, T: int, sequences: DegreeSequences | None = None,
                         exact_below: int = EXACT_DTW_BELOW, radius: int = FASTDTW_RADIUS) -> DistanceRow:
    """Cumulative structural distance of a node pair for ``tau = 0..T``."""
    if T < 0:
        raise ValueError("T must be >= 0")
    u, v = sorted(pair)
    seqs = sequences if sequences is not None and sequences.max_tau >= T else DegreeSequences(g, T)
    su, sv = seqs(u), seqs(v)
    out = []
    f = 0.0
    for tau in range(T + 1):
        if tau >= len(su) or tau >= len(sv):
            break
        if u != v:
            f += dtw_cost(su[tau], sv[tau], exact_below, radius)
        out.append(f)
    out.extend([None] * (T + 1 - len(out)))
    return DistanceRow(tuple(pair), tuple(out))


def write_distance_table(rows, path):
    """Audit dump with columns ``g,h,tau,f_tau`` (defined levels only)."""
    with open(path, "w") as fh:
        fh.write("g,h,tau,f_tau\n")
        for row in rows:
            for tau, f in row.defined():
                fh.write(f"{row.pair[0]},{row.pair[1]},{tau},{f!r}\n")
