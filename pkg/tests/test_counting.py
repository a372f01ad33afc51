from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from tropapsp.counting import (CountMatrix, betweenness, betweenness_all, count_approx, count_capped_directed,
                               count_exact, count_mod_directed, count_undirected_seidel)
from tropapsp.generators import bigcount_layered, random_digraph, random_undirected, stacked_layers
from tropapsp.graph import Graph
from tropapsp.oracles import brandes_exact, oracle_count
from tropapsp.semiring import INF, InvalidArgument

C4 = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], directed=False)
C4_DIRECTED_BOTH = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0), (1, 0), (2, 1), (3, 2), (0, 3)])


def random_tree(n, seed, directed=False):
    rng = np.random.default_rng(seed)
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    return Graph(n, edges, directed=directed)


def ref_counts(g):
    d, c = oracle_count(g)
    return d, c


def rel_err(approx, exact):
    worst = Fraction(0)
    for a, e in zip(approx.ravel().tolist(), exact.ravel().tolist()):
        if e:
            worst = max(worst, abs(Fraction(a) - e) / e)
        elif a:
            return Fraction(10**9)
    return worst


def test_exact_c4():
    cm = count_exact(C4)
    assert cm.counts[0, 2] == 2 and cm.counts[1, 3] == 2


def test_exact_stacked_layers():
    g = stacked_layers(20)
    assert count_exact(g).counts[0, g.n - 1] == 2**20


def test_exact_random():
    g = random_digraph(128, 3, avg_degree=4)
    d, c = ref_counts(g)
    cm = count_exact(g)
    assert (cm.dist == d).all() and (cm.counts == c).all()


@given(st.integers(1, 30), st.integers(0, 10**6), st.booleans(), st.floats(0.5, 6))
def test_exact_property(n, seed, directed, deg):
    g = (random_digraph if directed else random_undirected)(n, seed, avg_degree=deg)
    d, c = ref_counts(g)
    cm = count_exact(g)
    assert (cm.counts == c).all()
    assert ((cm.counts == 0) == (cm.dist == INF)).all()
    assert all(cm.counts[i, i] == 1 for i in range(n))


def test_capped_tree_and_cycle():
    t = random_tree(30, 1, directed=True)
    cm = count_capped_directed(t, 5)
    assert set(cm.counts[cm.dist != INF].tolist()) == {1}
    cm = count_capped_directed(C4_DIRECTED_BOTH, 2)
    assert cm.counts[0, 2] == 2 and cm.counts[1, 3] == 2


def test_capped_random():
    g = random_digraph(64, 4, avg_degree=4)
    d, c = ref_counts(g)
    cm = count_capped_directed(g, 8)
    assert (cm.counts == np.minimum(c, 8)).all()
    assert cm.counts.max() <= 8


@given(st.integers(1, 30), st.integers(0, 10**6), st.integers(2, 20))
def test_capped_property(n, seed, U):
    g = random_digraph(n, seed, avg_degree=3)
    d, c = ref_counts(g)
    assert (count_capped_directed(g, U, seed=seed).counts == np.minimum(c, U)).all()


def test_capped_long_paths_small_cap():
    # shortest paths of about n/3 vertices against a cap of 2
    g = bigcount_layered(90, seed=90)
    d, c = ref_counts(g)
    tele = {}
    cm = count_capped_directed(g, 2, seed=1, telemetry=tele)
    assert (cm.counts == np.minimum(c, 2)).all()
    assert tele["attempts"] == 1


def test_seidel_modes_small():
    cm = count_undirected_seidel(C4, "mod", 2)
    assert cm.counts[0, 2] == 0 and cm.counts[0, 1] == 1
    t = random_tree(25, 2)
    for mode in ("mod", "capped"):
        cm = count_undirected_seidel(t, mode, 7)
        assert set(cm.counts[cm.dist != INF].tolist()) == {1}


def test_seidel_mod_random():
    g = random_undirected(128, 5, avg_degree=4)
    d, c = ref_counts(g)
    assert (count_undirected_seidel(g, "mod", 97).counts == c % 97).all()


@given(st.integers(1, 30), st.integers(0, 10**6), st.integers(2, 30), st.sampled_from(["mod", "capped"]),
       st.booleans())
def test_seidel_property(n, seed, U, mode, connected):
    g = random_undirected(n, seed, avg_degree=3, connected=connected)
    d, c = ref_counts(g)
    want = c % U if mode == "mod" else np.minimum(c, U)
    assert (count_undirected_seidel(g, mode, U).counts == want).all()


def test_mod_directed_small():
    t = random_tree(20, 3, directed=True)
    cm = count_mod_directed(t, 5)
    assert set(cm.counts[cm.dist != INF].tolist()) == {1}
    two = Graph(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
    assert count_mod_directed(two, 2).counts[0, 3] == 0


def test_mod_directed_random():
    g = random_digraph(64, 6, avg_degree=4)
    U = 10**6 + 3
    d, c = ref_counts(g)
    assert (count_mod_directed(g, U).counts == c % U).all()


@given(st.integers(1, 30), st.integers(0, 10**6), st.integers(2, 40))
def test_mod_directed_property(n, seed, U):
    g = random_digraph(n, seed, avg_degree=3)
    d, c = ref_counts(g)
    assert (count_mod_directed(g, U).counts == c % U).all()


def test_bad_modulus():
    with pytest.raises(InvalidArgument):
        count_mod_directed(C4_DIRECTED_BOTH, 1)
    with pytest.raises(InvalidArgument):
        CountMatrix("weird", np.zeros((1, 1)), np.zeros((1, 1)))


def test_approx_tree_exact_ones():
    cm = count_approx(random_tree(25, 4), 10)
    assert (cm.counts[cm.dist != INF] == 1).all()


def test_approx_layered():
    g = stacked_layers(20)
    cm = count_approx(g, 100)
    assert abs(cm.counts[0, g.n - 1] - 2**20) <= 2**20 / 100


def test_approx_random_undirected():
    g = random_undirected(96, 7, avg_degree=4)
    d, c = ref_counts(g)
    assert rel_err(count_approx(g, 50).counts, c) <= Fraction(1, 50)


@given(st.integers(1, 40), st.integers(0, 10**6), st.booleans(), st.sampled_from([10, 100]))
def test_approx_property(n, seed, directed, U):
    g = (random_digraph if directed else random_undirected)(n, seed, avg_degree=3)
    d, c = ref_counts(g)
    assert rel_err(count_approx(g, U).counts, c) <= Fraction(1, U)


def test_bigcount_family_bits():
    g = bigcount_layered(60)
    d, c = ref_counts(g)
    assert max(int(x).bit_length() for x in c.ravel()) >= 60 // 6
    assert (count_exact(g).counts == c).all()


def test_bc_star_and_tree():
    star = Graph(4, [(0, 1), (0, 2), (0, 3)], directed=False)
    assert betweenness(star, 0) == 6
    assert betweenness(star, 2) == 0
    t = random_tree(20, 8)
    deg = np.bincount(np.concatenate([t.u, t.v]), minlength=20)
    for leaf in np.nonzero(deg == 1)[0]:
        assert betweenness(t, int(leaf)) == 0


def test_bc_random_matches_brandes():
    g = random_undirected(64, 9, avg_degree=4)
    assert betweenness_all(g) == brandes_exact(g)


def test_bc_bounds_and_networkx():
    g = random_digraph(40, 10)
    bc = betweenness_all(g)
    ref = nx.betweenness_centrality(nx.DiGraph(list(zip(g.u.tolist(), g.v.tolist()))), normalized=False)
    n = g.n
    for v in range(n):
        assert 0 <= bc[v] <= (n - 1) * (n - 2)
        assert abs(float(bc[v]) - ref.get(v, 0.0)) < 1e-9
    assert all(isinstance(x, Fraction) for x in bc)


def test_bc_approx_within_factor():
    g = random_undirected(50, 11, avg_degree=3)
    exact = betweenness_all(g)
    approx = betweenness_all(g, "approx", 100)
    for e, a in zip(exact, approx):
        assert abs(a - float(e)) <= float(e) / 100 + 1e-9


def test_bc_bad_vertex():
    with pytest.raises(InvalidArgument):
        betweenness(C4, 9)
