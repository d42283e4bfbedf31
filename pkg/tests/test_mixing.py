import numpy as np
import pytest
from scipy import integrate, stats

from wrgnn.datasets import gen_planted_partition
from wrgnn.mixing import (UndefinedValue, assortativity_profile, feature_smoothness, global_assortativity,
                          global_mixing_matrix, label_smoothness, local_assortativity, local_mixing_matrix,
                          local_assortativity_all, ppr_weights, totalrank_matrix, totalrank_terms,
                          totalrank_weights)

from conftest import make, random_graph


def test_global_mixing_two_triangles(two_triangles):
    m = global_mixing_matrix(two_triangles)
    np.testing.assert_allclose(m.entries, [[0.5, 0], [0, 0.5]])
    assert global_assortativity(m) == 1.0


def test_global_mixing_k22(k22):
    m = global_mixing_matrix(k22)
    np.testing.assert_allclose(m.entries, [[0, 0.5], [0.5, 0]])
    assert global_assortativity(m) == -1.0


def test_global_mixing_five_node_hand_count():
    # half-edges: 0-0 x2, 0-1 x2 (each way), 1-1 x4 -> /10
    g = make([(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)], labels=[0, 0, 1, 1, 1])
    m = global_mixing_matrix(g)
    np.testing.assert_allclose(m.entries, [[0.2, 0.2], [0.2, 0.4]], atol=1e-15)
    assert global_assortativity(m) == pytest.approx(1 / 6, abs=1e-12)


def test_global_mixing_ignores_unlabeled_edges():
    g = make([(0, 1), (1, 2), (2, 3)], labels=[0, 0, -1, 1])
    np.testing.assert_allclose(global_mixing_matrix(g).entries, [[1, 0], [0, 0]])


def test_global_errors():
    with pytest.raises(UndefinedValue, match="empty"):
        global_mixing_matrix(make([(0, 1)], labels=[0, -1]))
    with pytest.raises(UndefinedValue, match="undefined"):
        global_assortativity(global_mixing_matrix(make([(0, 1)], labels=[0, 0])))


def test_ppr_limits(triangle, path3):
    np.testing.assert_array_equal(ppr_weights(path3, 1, 0.0).weights, [0, 1, 0])
    w = ppr_weights(triangle, 0, 1.0).weights
    np.testing.assert_allclose(w, triangle.degrees / (2 * triangle.num_edges))


def test_ppr_path_matches_exact_solve(path3):
    # exact rational solve of w (I - P/2) = e_0 / 2
    np.testing.assert_allclose(ppr_weights(path3, 0, 0.5).weights, [7 / 12, 1 / 3, 1 / 12], atol=1e-10)


def test_ppr_errors(path3):
    with pytest.raises(ValueError):
        ppr_weights(path3, 0, 1.5)
    with pytest.raises(ValueError):
        ppr_weights(make([(0, 1)], n=3), 2, 0.5)


def test_ppr_is_distribution_zero_off_component():
    g = make([(0, 1), (1, 2), (3, 4)], labels=[0, 1, 0, 1, 0])
    w = ppr_weights(g, 0, 0.85).weights
    assert w.min() >= 0
    assert w.sum() == pytest.approx(1, abs=1e-6)
    assert w[3] == w[4] == 0


def test_totalrank_terms():
    assert totalrank_terms(0.5) == 1            # 1/(1+2) < 0.5 <= 1/(0+2)
    assert totalrank_terms(1e-6) == 999_999
    with pytest.raises(ValueError):
        totalrank_terms(0)


def test_totalrank_single_node_component():
    g = make([(0, 1)], n=3)
    np.testing.assert_array_equal(totalrank_weights(g, 2).weights, [0, 0, 1])


def test_totalrank_triangle_closed_form(triangle):
    # sum_k x^k/((k+1)(k+2)) at x=-1/2 is the weight on the orthogonal mode
    x = -0.5
    s = -np.log(1 - x) / x - (-np.log(1 - x) - x) / x ** 2
    expected = [1 / 3 + 2 * s / 3, 1 / 3 - s / 3, 1 / 3 - s / 3]
    np.testing.assert_allclose(totalrank_weights(triangle, 0, tol=1e-12).weights, expected, atol=1e-11)


def _quadrature_totalrank(g, l):
    """Integral over alpha of exact personalised PageRank solves."""
    a = g.adjacency.toarray()
    d = a.sum(1)
    p = a / d[:, None]
    n = len(a)
    e = np.eye(n)[l]
    return np.array([integrate.quad(
        lambda al, i=i: ((1 - al) * np.linalg.solve((np.eye(n) - al * p).T, e))[i], 0, 1,
        epsabs=1e-13, limit=200)[0] for i in range(n)])


def test_totalrank_matches_quadrature(barbell6):
    for l in (0, 2):
        w = totalrank_weights(barbell6, l, tol=1e-9).weights
        np.testing.assert_allclose(w, _quadrature_totalrank(barbell6, l), atol=1e-8)


def test_totalrank_bipartite_limit_cycle(k22):
    w = totalrank_weights(k22, 0, tol=1e-9).weights
    np.testing.assert_allclose(w, _quadrature_totalrank(k22, 0), atol=1e-8)


def test_totalrank_tol_halving_converges(barbell6):
    tol = 1e-3
    prev = totalrank_weights(barbell6, 0, tol).weights
    for _ in range(4):
        tol /= 2
        cur = totalrank_weights(barbell6, 0, tol).weights
        assert np.abs(cur - prev).sum() < 2 * tol
        prev = cur


def test_local_mixing_stationary_equals_global():
    g = make([(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)], labels=[0, 0, 1, 1, 1])
    pi = g.degrees / g.degrees.sum()
    np.testing.assert_allclose(local_mixing_matrix(g, pi).entries, global_mixing_matrix(g).entries)


def test_local_mixing_single_seed_row_mass(star5):
    w = np.eye(6)[0]
    m = local_mixing_matrix(star5, w)
    np.testing.assert_allclose(m.entries, [[0, 1], [0, 0]])
    np.testing.assert_allclose(m.symmetrized().entries, [[0, 0.5], [0.5, 0]])


def _local_r_oracle(g, l):
    """Dense re-derivation: quadrature weights, edge loops, global marginals."""
    w = _quadrature_totalrank(g, l)
    c = g.num_classes
    m = np.zeros((c, c))
    glob = np.zeros((c, c))
    for a, b in g.edges.tolist():
        for i, j in ((a, b), (b, a)):
            m[g.labels[i], g.labels[j]] += w[i] / g.degrees[i]
            glob[g.labels[i], g.labels[j]] += 1
    m = (m + m.T) / 2 / m.sum()
    a = glob.sum(1) / glob.sum()
    return (np.trace(m) - a @ a) / (1 - a @ a)


def test_local_assortativity_planted_disassortative_region():
    # K_{3,3} across labels (nodes 0-5) bridged to two same-label cliques (6-13)
    edges = [(i, j) for i in range(3) for j in range(3, 6)]
    edges += [(i, j) for i in range(6, 10) for j in range(i + 1, 10)]
    edges += [(i, j) for i in range(10, 14) for j in range(i + 1, 14)]
    edges += [(5, 6), (9, 10)]
    g = make(edges, labels=[0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0])
    for l in (0, 4, 8, 12):
        assert local_assortativity(g, l, tol=1e-9) == pytest.approx(_local_r_oracle(g, l), abs=1e-7)
    assert local_assortativity(g, 0, tol=1e-9) < 0
    assert local_assortativity(g, 12, tol=1e-9) > 0


def test_local_equals_one_when_all_mass_on_same_label(two_triangles):
    assert local_assortativity(two_triangles, 0) == pytest.approx(1.0)


def test_stationary_weights_recover_global():
    rng = np.random.default_rng(3)
    g = random_graph(rng, 20, 0.2, connected=True)
    rg = global_assortativity(global_mixing_matrix(g))
    pi = g.degrees / g.degrees.sum()
    for l in range(g.num_nodes):
        assert abs(local_assortativity(g, l, weights=pi) - rg) < 1e-8


def test_local_assortativity_undefined_for_isolated_node():
    g = make([(0, 1), (1, 2)], n=4, labels=[0, 1, 0, 1])
    with pytest.raises(UndefinedValue):
        local_assortativity(g, 3)


def test_smoothness():
    g = make([(0, i) for i in range(1, 6)], labels=[0, 0, 0, 0, 1, 1],
             features=np.array([[1.0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0]]))
    assert label_smoothness(g, 0) == pytest.approx(0.6)
    assert label_smoothness(g, 1) == 1.0
    assert label_smoothness(g, 4) == 0.0
    assert feature_smoothness(g, 0) == pytest.approx(1.0)
    assert feature_smoothness(g, 1) == pytest.approx(1.0)


def test_feature_smoothness_four_neighbours():
    x = np.array([[3.0, -1], [0, 0], [2, 0], [0, 2], [2, 2]])
    g = make([(0, 1), (0, 2), (0, 3), (0, 4)], labels=[0] * 5, features=x)
    assert feature_smoothness(g, 0) == pytest.approx(8.0)     # mean (1,1), diff (2,-2)


def test_smoothness_undefined():
    g = make([(0, 1)], n=3, labels=[0, 0, 0], features=np.zeros((3, 1)))
    with pytest.raises(UndefinedValue):
        label_smoothness(g, 2)
    with pytest.raises(UndefinedValue):
        feature_smoothness(g, 2)
    with pytest.raises(UndefinedValue):
        feature_smoothness(g.with_features(None), 0)


def test_profile_extremes(two_triangles, k22):
    p = assortativity_profile(two_triangles)
    np.testing.assert_allclose(p.r_local, 1.0)
    assert p.r_global == 1.0
    p = assortativity_profile(k22)
    np.testing.assert_allclose(p.r_local, -1.0)
    assert p.counts[0] == 4 and p.counts.sum() == 4
    assert len(p.counts) == 41


def test_profile_flags_undefined():
    g = make([(0, 1), (1, 2)], n=5, labels=[0, 1, 0, 1, -1])
    p = assortativity_profile(g)
    assert p.defined.tolist() == [True, True, True, False, False]


def test_profile_planted_partition_matches_pointwise():
    g = gen_planted_partition(n=40, blocks=2, p_in=0.3, p_out=0.08, seed=1)
    p = assortativity_profile(g)
    for l in (0, 7, 19):
        assert p.r_local[l] == pytest.approx(local_assortativity(g, l), abs=1e-12)
    assert np.all(p.r_local[p.defined] <= 1 + 1e-9)


def test_label_smoothness_correlates_with_local_assortativity():
    g = gen_planted_partition(n=120, blocks=3, p_in=0.15, p_out=0.04, seed=4)
    r, _ = local_assortativity_all(g)
    eps = np.array([label_smoothness(g, u) if g.degrees[u] else np.nan for u in range(g.num_nodes)])
    ok = ~np.isnan(r) & ~np.isnan(eps)
    assert ok.sum() >= 100
    assert stats.spearmanr(r[ok], eps[ok]).statistic > 0


def test_totalrank_matrix_rows_match_single(barbell6):
    full = totalrank_matrix(barbell6.adjacency, 1e-6)
    for l in range(6):
        np.testing.assert_allclose(full[l], totalrank_weights(barbell6, l).weights, atol=1e-14)
