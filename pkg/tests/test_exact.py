import numpy as np
import pytest
from hypothesis import given, strategies as st

from tropapsp.exact import (brute_apsp, cred_apsp, one_red_apsp, reconstruct_path, seidel_apsp,
                            undirected_small_weight_apsp, zwick_apsp)
from tropapsp.generators import colored, random_digraph, random_undirected
from tropapsp.graph import BLUE, RED, Graph
from tropapsp.oracles import bellman_ford_apsp, bfs_apsp, budgeted_apsp, floyd_warshall, oracle_apsp
from tropapsp.semiring import INF, CostModel, InvalidArgument, NegativeCycle, ValidationError


def path_graph(n, directed=False):
    return Graph(n, [(i, i + 1) for i in range(n - 1)], directed=directed)


def test_seidel_small():
    assert seidel_apsp(path_graph(3))[0, 2] == 2
    k5 = Graph(5, [(i, j) for i in range(5) for j in range(i + 1, 5)], directed=False)
    d = seidel_apsp(k5)
    assert (d == 1 - np.eye(5, dtype=np.int64)).all()


def test_seidel_random_connected():
    g = random_undirected(128, 5)
    assert (seidel_apsp(g) == bfs_apsp(g)).all()


def test_seidel_rejects_directed():
    with pytest.raises(InvalidArgument):
        seidel_apsp(path_graph(3, directed=True))


@given(st.integers(1, 30), st.integers(0, 10**6), st.floats(0.5, 4), st.booleans())
def test_seidel_property(n, seed, deg, connected):
    g = random_undirected(n, seed, avg_degree=deg, connected=connected)
    assert (seidel_apsp(g) == bfs_apsp(g)).all()


def test_zwick_path_with_small_crossover():
    g = path_graph(10, directed=True)
    assert (zwick_apsp(g, cost=CostModel(crossover_L=4)) == bfs_apsp(g)).all()


def test_zwick_positive_weights():
    g = random_digraph(96, 1, weights=(1, 3))
    assert (zwick_apsp(g) == floyd_warshall(g)).all()


def _no_neg_cycle_graph(n, seed, lo=-2, hi=3):
    g = random_digraph(n, seed, weights=(lo, hi))
    rng = np.random.default_rng(seed)
    # shift with random potentials until no negative cycle; cheap rejection loop
    for _ in range(50):
        try:
            bellman_ford_apsp(g)
            return g
        except NegativeCycle:
            w = np.maximum(g.w, rng.integers(lo, hi + 1, g.m))
            g = g.with_arrays(w=w)
    raise AssertionError("could not build an instance")


def test_zwick_negative_weights():
    g = _no_neg_cycle_graph(96, 2)
    assert g.w.min() < 0
    assert (zwick_apsp(g) == bellman_ford_apsp(g)).all()


def test_zwick_negative_cycle():
    with pytest.raises(NegativeCycle):
        zwick_apsp(Graph(3, [(0, 1, 1), (1, 2, -3), (2, 0, 1)]))


@given(st.integers(1, 25), st.integers(0, 10**6), st.integers(0, 4))
def test_zwick_property(n, seed, hi):
    g = random_digraph(n, seed, weights=(0, hi))
    assert (zwick_apsp(g, seed=seed) == floyd_warshall(g)).all()


def test_zwick_successors_rebuild_shortest_paths():
    g = random_digraph(40, 3, weights=(1, 3))
    d, succ = zwick_apsp(g, return_successors=True)
    wm = g.weight_matrix()
    for u in range(0, 40, 7):
        for v in range(40):
            if u != v and d[u, v] != INF:
                p = reconstruct_path(succ, u, v)
                assert p[0] == u and p[-1] == v
                assert sum(wm[a, b] for a, b in zip(p, p[1:])) == d[u, v]


def test_small_weight_agrees_with_seidel_when_unweighted():
    g = random_undirected(60, 8)
    assert (undirected_small_weight_apsp(g) == seidel_apsp(g)).all()


def test_small_weight_star():
    star = Graph(4, [(0, 1, 3), (0, 2, 2), (0, 3, 1)], directed=False)
    d = undirected_small_weight_apsp(star, c0=3)
    assert d[1, 2] == 5 and d[2, 3] == 3 and d[1, 3] == 4


def test_small_weight_random():
    g = random_undirected(96, 4, weights=(1, 5))
    assert (undirected_small_weight_apsp(g) == oracle_apsp(g)).all()


@given(st.integers(1, 25), st.integers(0, 10**6), st.integers(0, 4))
def test_small_weight_property(n, seed, hi):
    g = random_undirected(n, seed, weights=(0, hi), connected=seed % 2 == 0)
    assert (undirected_small_weight_apsp(g, seed=seed) == oracle_apsp(g)).all()


def test_small_weight_rejects_directed():
    with pytest.raises(InvalidArgument):
        undirected_small_weight_apsp(path_graph(3, directed=True))


def test_brute_apsp_matches_floyd():
    g = random_digraph(30, 6, weights=(1, 9))
    assert (brute_apsp(g) == floyd_warshall(g)).all()


def test_cred_budget_boundary():
    g = Graph(2, [(0, 1)], directed=False, color=[RED])
    assert cred_apsp(g, 0)[0, 1] == INF
    assert cred_apsp(g, 1)[0, 1] == 1
    g = Graph(3, [(0, 1), (1, 2)], directed=False, color=[RED, BLUE])
    assert cred_apsp(g, 1)[0, 2] == 2
    assert one_red_apsp(g)[0, 2] == 2


def test_cred_random():
    g = colored(64, 3)
    assert (cred_apsp(g, 2) == budgeted_apsp(g, 2)).all()


def test_cred_rejects_uncolored():
    with pytest.raises(ValidationError):
        cred_apsp(path_graph(3), 1)
    with pytest.raises(InvalidArgument):
        cred_apsp(colored(4, 0), -1)


def test_one_red_all_blue_is_seidel():
    g = random_undirected(40, 2)
    gb = Graph(g.n, list(zip(g.u.tolist(), g.v.tolist())), directed=False, color=[BLUE] * g.m)
    assert (one_red_apsp(gb) == seidel_apsp(g)).all()


def test_one_red_random():
    g = colored(96, 5)
    assert (one_red_apsp(g) == cred_apsp(g, 1)).all()


@given(st.integers(1, 20), st.integers(0, 10**6), st.floats(0, 1))
def test_cred_monotone_in_budget(n, seed, frac):
    g = colored(n, seed, red_fraction=frac)
    prev = None
    for c in range(4):
        d = cred_apsp(g, c)
        assert (d == budgeted_apsp(g, c)).all()
        if prev is not None:
            assert (d <= prev).all()
        prev = d
    assert (one_red_apsp(g) == cred_apsp(g, 1)).all()
