import numpy as np
import pytest
from hypothesis import given, strategies as st

from tropapsp.approx import K_CONSTANT, ErrorProfile, approx_apsp, approx_paths
from tropapsp.generators import random_digraph
from tropapsp.graph import Graph
from tropapsp.oracles import bfs_apsp, oracle_apsp
from tropapsp.semiring import INF, NoPath, ValidationError


def within(est, d, p, K=K_CONSTANT):
    fin = d != INF
    if not ((est == INF) == ~fin).all():
        return False
    dd, ee = d[fin], est[fin]
    slack = K * np.ceil(np.power(dd.astype(float), p))
    return bool((ee >= dd).all() and (ee <= dd + slack).all())


def test_profile_validation():
    with pytest.raises(ValidationError):
        ErrorProfile.power(1.5)
    with pytest.raises(ValidationError):
        ErrorProfile()
    with pytest.raises(ValidationError):
        ErrorProfile.from_table({1: 2.0, 5: 1.0}).validate(10)
    ErrorProfile.power(0.5).validate(100)


def test_p0_is_exact():
    g = random_digraph(80, 1)
    est, cert = approx_apsp(g, ErrorProfile.power(0))
    assert (est == bfs_apsp(g)).all()
    assert cert["K"] == K_CONSTANT <= 4


def test_p1_on_long_path():
    g = Graph(101, [(i, i + 1) for i in range(100)])
    est, _ = approx_apsp(g, ErrorProfile.power(1))
    d = bfs_apsp(g)
    fin = d != INF
    assert (est[fin] <= 2 * d[fin]).all() and (est[fin] >= d[fin]).all()


def test_random_half_power():
    g = random_digraph(128, 2, avg_degree=2)
    est, _ = approx_apsp(g, ErrorProfile.power(0.5))
    d = bfs_apsp(g)
    fin = (d != INF) & (d > 0)
    ratio = (est[fin] - d[fin]) / np.ceil(np.sqrt(d[fin]))
    assert ratio.max() <= K_CONSTANT and (est[fin] >= d[fin]).all()


@given(st.integers(1, 40), st.integers(0, 10**6), st.sampled_from([0.0, 0.25, 0.5, 1.0]),
       st.floats(1.0, 3.0))
def test_bound_property(n, seed, p, deg):
    g = random_digraph(n, seed, avg_degree=deg)
    est, _ = approx_apsp(g, ErrorProfile.power(p), seed=seed)
    assert within(est, bfs_apsp(g), p)


def test_small_positive_weights():
    g = random_digraph(60, 3, weights=(1, 3))
    est, _ = approx_apsp(g, ErrorProfile.power(0.5))
    assert within(est, oracle_apsp(g), 0.5)


def test_zero_weight_rejected():
    with pytest.raises(ValidationError):
        approx_apsp(Graph(2, [(0, 1, 0)]), ErrorProfile.power(0.5))


def test_paths_on_path_graph():
    g = Graph(8, [(i, i + 1) for i in range(7)])
    assert approx_paths(g, ErrorProfile.power(0.5), (1, 6)) == [1, 2, 3, 4, 5, 6]


def test_paths_walk_is_valid():
    g = Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    est, _ = approx_apsp(g, ErrorProfile.power(0.5))
    for u in range(4):
        for v in range(4):
            p = approx_paths(g, ErrorProfile.power(0.5), (u, v))
            assert p[0] == u and p[-1] == v
            assert all((b - a) % 4 == 1 for a, b in zip(p, p[1:]))
            assert len(p) - 1 <= est[u, v]


def test_paths_random_lengths():
    g = random_digraph(70, 5)
    prof = ErrorProfile.power(0.5)
    est, _ = approx_apsp(g, prof)
    arcs = set(zip(g.u.tolist(), g.v.tolist()))
    for u in range(0, 70, 9):
        for v in range(0, 70, 4):
            if est[u, v] != INF:
                p = approx_paths(g, prof, (u, v))
                assert all((a, b) in arcs for a, b in zip(p, p[1:]))
                assert len(p) - 1 <= est[u, v]


def test_paths_unreachable():
    with pytest.raises(NoPath):
        approx_paths(Graph(2, []), ErrorProfile.power(0.5), (0, 1))
