import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wrgnn.compgraph import (PROXIMITY, build_naive, build_practical, candidate_pairs, default_budget,
                             deserialize, serialize)
from wrgnn.graph import GraphFormatError

from conftest import make, random_graph

E1 = math.exp(-1)


def as_dict(rel):
    return {(int(s), int(d)): float(w) for s, d, w in zip(rel.src, rel.dst, rel.weight)}


def test_path4_T0_hand_enumerated():
    # degrees 1,2,2,1 -> cost 1 between an end and a middle node, 0 otherwise
    c = build_naive(make([(0, 1), (1, 2), (2, 3)]), 0)
    assert c.names == ["0", PROXIMITY]
    expect = {(0, 1): E1, (0, 2): E1, (0, 3): 1.0, (1, 2): 1.0, (1, 3): E1, (2, 3): E1}
    expect.update({(v, u): w for (u, v), w in list(expect.items())})
    got = as_dict(c.relations["0"])
    assert got.keys() == expect.keys()
    for k in expect:
        assert got[k] == pytest.approx(expect[k], rel=1e-15)
    assert as_dict(c.relations[PROXIMITY]) == {(0, 1): 1, (1, 0): 1, (1, 2): 1, (2, 1): 1, (2, 3): 1, (3, 2): 1}


def test_barbell_relations(barbell6):
    c = build_naive(barbell6, 3)
    r2 = as_dict(c.relations["2"])
    assert r2[(0, 2)] == pytest.approx(math.exp(-1.5))
    assert (0, 2) not in as_dict(c.relations["3"])   # ring 3 of node 2 is empty
    assert r2[(0, 5)] == 1.0


def test_directed_copies_sorted_and_weights_in_range(barbell6):
    c = build_naive(barbell6, 2)
    for rel in c.relations.values():
        d = as_dict(rel)
        assert all(d[(v, u)] == w for (u, v), w in d.items())
        keys = list(zip(rel.src.tolist(), rel.dst.tolist()))
        assert keys == sorted(keys)
        assert np.all((rel.weight > 0) & (rel.weight <= 1))
        assert not np.any(rel.src == rel.dst)


def test_weight_floor(barbell6):
    c = build_naive(barbell6, 2, weight_floor=0.5)
    for name in c.structural:
        assert np.all(c.relations[name].weight >= 0.5)
    assert c.num_edges(PROXIMITY) == 2 * barbell6.num_edges


def test_negative_T(barbell6):
    with pytest.raises(ValueError):
        build_naive(barbell6, -1)
    with pytest.raises(ValueError):
        build_practical(barbell6, -1)


def test_default_budget_and_candidates():
    assert default_budget(2) == 1
    assert default_budget(140) == 8
    g = make([(0, i) for i in range(1, 6)])
    pairs = candidate_pairs(g, 1)
    # order by (degree, id): 1 2 3 4 5 0
    assert pairs == [(0, 5), (1, 2), (2, 3), (3, 4), (4, 5)]


def test_candidate_budget_per_node():
    rng = np.random.default_rng(1)
    g = random_graph(rng, 40, 0.1)
    b = default_budget(40)
    pairs = candidate_pairs(g, b)
    cnt = np.zeros(40, int)
    for u, v in pairs:
        cnt[u] += 1
        cnt[v] += 1
    # each node proposes at most 2b, and receives proposals only from nodes within b slots
    assert cnt.max() <= 2 * b


@pytest.mark.parametrize("seed", range(20))
def test_practical_subset_of_naive(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 41))
    g = random_graph(rng, n, 3.0 / n)
    T = int(rng.integers(0, 3))
    naive, prac = build_naive(g, T), build_practical(g, T)
    for name in prac.structural:
        a, b = as_dict(prac.relations[name]), as_dict(naive.relations[name])
        assert a.keys() <= b.keys()
        assert all(a[k] == b[k] for k in a)
    assert as_dict(prac.relations[PROXIMITY]) == as_dict(naive.relations[PROXIMITY])


def test_practical_full_budget_equals_naive(barbell6):
    assert build_practical(barbell6, 2, budget_per_side=6) == build_naive(barbell6, 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000))
def test_naive_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 12, 0.25)
    perm = rng.permutation(12)
    assert build_naive(g.permute(perm), 2) == build_naive(g, 2).permute(perm)


def test_serialize_roundtrip(tmp_path, barbell6):
    c = build_practical(barbell6, 2, weight_floor=0.1)
    p = tmp_path / "c.tsv"
    serialize(c, p)
    d = deserialize(p)
    assert d == c
    assert d.meta["mode"] == "practical" and d.meta["budget"] == c.meta["budget"]
    serialize(d, tmp_path / "again.tsv")
    assert (tmp_path / "again.tsv").read_bytes() == p.read_bytes()


@pytest.mark.parametrize("body,lineno", [
    ("src\tdst\trel\tweight\n0\t1\tp\n", 2),
    ("src\tdst\trel\tweight\n0\t1\tq\t1.0\n", 2),
    ("src\tdst\trel\tweight\n0\t1\t0\t1.5\n", 2),
    ("src\tdst\trel\tweight\n0\tx\t0\t0.5\n", 2),
    ("bogus\n", 1),
])
def test_deserialize_errors(tmp_path, body, lineno):
    p = tmp_path / "c.tsv"
    p.write_text(body)
    with pytest.raises(GraphFormatError, match=f":{lineno}:"):
        deserialize(p)


def test_select_and_union(barbell6):
    c = build_naive(barbell6, 1)
    assert c.select("proximity").names == [PROXIMITY]
    assert c.select("structure").names == ["0", "1"]
    with pytest.raises(ValueError):
        c.select("nope")
    u = c.union_adjacency()
    assert abs(u - u.T).max() == 0
    assert u[0, 1] == pytest.approx(1.0 + sum(c.adjacency(k)[0, 1] for k in ("0", "1")))
