"""Synthetic graph generators and loaders for public benchmark layouts.

Benchmark data is never shipped. Point the loaders at a directory laid out
as described in ``README.md`` ("Benchmark data").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import LabeledGraph, UNLABELED, load_graph
from .model import rng_stream
from .training import Split

DEGREE_BUCKETS = 32


# -- features ----------------------------------------------------------------


def degree_bucket_features(g: LabeledGraph, buckets: int = DEGREE_BUCKETS) -> np.ndarray:
    """One-hot of log-spaced degree buckets, for graphs without attributes."""
    deg = g.degrees.astype(float)
    top = max(float(deg.max()) if len(deg) else 1.0, 1.0)
    edges = np.logspace(0, math.log10(top + 1), buckets)
    idx = np.clip(np.searchsorted(edges, deg + 1, side="right") - 1, 0, buckets - 1)
    x = np.zeros((g.num_nodes, buckets))
    x[np.arange(g.num_nodes), idx] = 1.0
    return x


def _noisy_onehot(labels, num_classes, noise, extra_dims, rng):
    x = np.zeros((len(labels), num_classes + extra_dims))
    x[np.arange(len(labels)), labels] = 1.0
    return x + noise * rng.standard_normal(x.shape)


# -- generators ----------------------------------------------------------------


@dataclass
class SyntheticSpec:
    generator: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        return cls(d["generator"], d.get("params", {}), int(d.get("seed", 0)))


def gen_planted_partition(n: int = 200, blocks: int = 2, p_in: float = 0.3, p_out: float = 0.05,
                          noise: float = 1.0, extra_dims: int = 0, seed: int = 0) -> LabeledGraph:
    """Stochastic block model; block index is the class label."""
    if blocks < 2:
        raise ValueError("need at least two blocks")
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = rng_stream(seed, "planted-partition")
    labels = np.arange(n) % blocks
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    edges = np.c_[iu[keep], ju[keep]]
    x = _noisy_onehot(labels, blocks, noise, extra_dims, rng)
    return LabeledGraph.from_edges(edges, n, labels, x)


def gen_structural_twins(n_background: int = 90, n_hubs: int = 10, fan: int = 4,
                         ring_k: int = 2, rewire: float = 0.1, noise: float = 1.5,
                         extra_dims: int = 0, seed: int = 0) -> LabeledGraph:
    """Copies of one hub-and-fan motif attached far apart to a sparse background.

    Each hub has ``fan`` pendant leaves plus one link into a small-world ring
    (degree ``fan + 1``). Hubs form class 0, leaves class 1 and background
    nodes classes 2 / 3 split at the median background degree, so every
    hub's neighbourhood carries labels different from its own.
    """
    rng = rng_stream(seed, "structural-twins")
    edges = []
    nb = n_background
    for u in range(nb):
        for k in range(1, ring_k + 1):
            v = (u + k) % nb
            if rng.random() < rewire:
                v = int(rng.integers(nb))
            if v != u:
                edges.append((u, v))
    anchors = np.linspace(0, nb, n_hubs, endpoint=False).astype(int)
    labels = [None] * nb
    nxt = nb
    hubs, leaves = [], []
    for a in anchors:
        hub = nxt
        nxt += 1
        hubs.append(hub)
        edges.append((hub, int(a)))
        for _ in range(fan):
            edges.append((hub, nxt))
            leaves.append(nxt)
            nxt += 1
    n = nxt
    g0 = LabeledGraph.from_edges(edges, n)
    deg = g0.degrees
    med = np.median(deg[:nb])
    y = np.empty(n, dtype=np.int64)
    y[:nb] = np.where(deg[:nb] <= med, 2, 3)
    y[hubs] = 0
    y[leaves] = 1
    x = _noisy_onehot(y, 4, noise, extra_dims, rng)
    return g0.with_labels(y).with_features(x)


def gen_barbell_family(clique: int = 5, path: int = 2, copies: int = 2, seed: int = 0) -> LabeledGraph:
    """Chain of cliques joined by paths; labels mark role (clique, bridge, path)."""
    del seed  # deterministic
    edges = []
    labels = []
    start = 0
    prev_bridge = None
    for c in range(copies):
        nodes = list(range(start, start + clique))
        edges += [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]
        labels += [0] * clique
        labels[nodes[0]] = 1
        labels[nodes[-1]] = 1
        if prev_bridge is not None:
            chain = list(range(start + clique, start + clique + path))
            seq = [prev_bridge] + chain + [nodes[0]]
            edges += list(zip(seq[:-1], seq[1:]))
            labels += [2] * path
            start += path
        prev_bridge = nodes[-1]
        start += clique
    return LabeledGraph.from_edges(edges, len(labels), np.array(labels))


def gen_degree_label(n: int = 150, degrees=(2, 4, 8), noise: float = 1.0, seed: int = 0) -> LabeledGraph:
    """Configuration-model graph whose class is the target degree of each node."""
    rng = rng_stream(seed, "degree-label")
    labels = np.arange(n) % len(degrees)
    stubs = np.repeat(np.arange(n), np.asarray(degrees)[labels])
    if len(stubs) % 2:
        stubs = stubs[:-1]
    rng.shuffle(stubs)
    x = _noisy_onehot(labels, len(degrees), noise, 0, rng)
    return LabeledGraph.from_edges(stubs.reshape(-1, 2), n, labels, x)


GENERATORS = {
    "planted-partition": gen_planted_partition,
    "structural-twins": gen_structural_twins,
    "hub-spoke": gen_structural_twins,
    "barbell-family": gen_barbell_family,
    "degree-label": gen_degree_label,
}


def generate(spec: SyntheticSpec) -> LabeledGraph:
    try:
        fn = GENERATORS[spec.generator]
    except KeyError:
        raise ValueError(f"unknown generator {spec.generator!r}; choose from {sorted(GENERATORS)}") from None
    return fn(**spec.params, seed=spec.seed)


# -- benchmark loaders -----------------------------------------------------------------


class DatasetLayoutError(FileNotFoundError):
    pass


GEOM_GCN = ("cornell", "texas", "wisconsin", "chameleon", "squirrel", "film", "actor")
PLANETOID = ("cora", "citeseer", "pubmed")
AIR_TRAFFIC = ("brazil-airports", "europe-airports", "usa-airports")


def _need(path: Path, hint: str) -> Path:
    if not path.exists():
        raise DatasetLayoutError(f"missing {path}; expected layout: {hint}")
    return path


def _load_geom_gcn(name, root):
    base = root / name
    hint = (f"{base}/out1_graph_edges.txt and {base}/out1_node_feature_label.txt "
            "(files from the geom-gcn repository, new_data/<name>/)")
    edge_file = _need(base / "out1_graph_edges.txt", hint)
    node_file = _need(base / "out1_node_feature_label.txt", hint)
    feats, labels = {}, {}
    with open(node_file) as fh:
        next(fh)
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                continue
            u = int(parts[0])
            labels[u] = int(parts[2])
            feats[u] = np.array([float(t) for t in parts[1].split(",")])
    edges = []
    with open(edge_file) as fh:
        next(fh)
        for line in fh:
            parts = line.split()
            if len(parts) >= 2:
                edges.append((int(parts[0]), int(parts[1])))
    n = max(max(labels) + 1, max(max(e) for e in edges) + 1)
    y = np.full(n, UNLABELED)
    for u, c in labels.items():
        y[u] = c
    dim = len(next(iter(feats.values())))
    x = np.zeros((n, dim))
    for u, row in feats.items():
        x[u] = row
    g = LabeledGraph.from_edges(edges, n, y, x)
    splits = []
    for d in (base / "splits", root / "splits"):
        if d.is_dir():
            for f in sorted(d.glob(f"{name}_split_0.6_0.2_*.npz"),
                            key=lambda p: int(p.stem.rsplit("_", 1)[1])):
                z = np.load(f)
                splits.append(Split(*(np.flatnonzero(z[k]) for k in ("train_mask", "val_mask", "test_mask"))))
            if splits:
                break
    return g, splits


def _load_planetoid(name, root):
    base = root / name
    hint = f"{base}/{name}.content and {base}/{name}.cites (LINQS release)"
    content = _need(base / f"{name}.content", hint)
    cites = _need(base / f"{name}.cites", hint)
    ids, rows, cls = {}, [], []
    with open(content) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            ids[parts[0]] = len(ids)
            rows.append([float(t) for t in parts[1:-1]])
            cls.append(parts[-1])
    classes = {c: i for i, c in enumerate(sorted(set(cls)))}
    edges = []
    with open(cites) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) == 2 and parts[0] in ids and parts[1] in ids:
                edges.append((ids[parts[0]], ids[parts[1]]))
    g = LabeledGraph.from_edges(edges, len(ids), np.array([classes[c] for c in cls]), np.array(rows))
    return g, []


def _load_air_traffic(name, root):
    base = root / name
    hint = (f"{base}/{name}.edgelist and {base}/labels-{name}.txt "
            "(struc2vec graph/ directory)")
    edge_file = _need(base / f"{name}.edgelist", hint)
    label_file = _need(base / f"labels-{name}.txt", hint)
    tmp = {}
    with open(label_file) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) == 2 and parts[0].isdigit():
                tmp[int(parts[0])] = int(parts[1])
    g = load_graph(edge_file)
    n = max(g.num_nodes, max(tmp) + 1)
    y = np.full(n, UNLABELED)
    for u, c in tmp.items():
        y[u] = c
    g = LabeledGraph.from_edges(g.edges, n, y)
    return g.with_features(degree_bucket_features(g)), []


def load_benchmark(name: str, root_dir) -> tuple[LabeledGraph, list[Split]]:
    """Load a public benchmark from ``root_dir`` with any published splits."""
    root = Path(root_dir)
    key = name.lower()
    if key in GEOM_GCN:
        return _load_geom_gcn(key, root)
    if key in PLANETOID:
        return _load_planetoid(key, root)
    if key in AIR_TRAFFIC or key in ("brazil", "europe", "usa"):
        key = key if key in AIR_TRAFFIC else f"{key}-airports"
        return _load_air_traffic(key, root)
    raise ValueError(f"unknown benchmark {name!r}")


# expected statistics: nodes, edges, classes, global assortativity
EXPECTED_STATS = {
    "chameleon": (2277, 31421, 5, 0.0331),
    "squirrel": (5201, 198493, 5, 0.0070),
    "actor": (7600, 26752, 5, 0.0047),
    "cornell": (183, 280, 5, -0.0706),
    "texas": (183, 295, 5, -0.2587),
    "wisconsin": (251, 466, 5, -0.1524),
    "cora": (2708, 5429, 7, 0.7710),
    "citeseer": (3327, 4732, 6, 0.6713),
    "pubmed": (19717, 44338, 3, 0.6860),
    "brazil-airports": (131, 1038, 4, 0.0116),
    "europe-airports": (399, 5995, 4, -0.0737),
    "usa-airports": (1190, 13599, 4, 0.2629),
}
