from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import py_minplus, rand_dist
from tropapsp.products import (ProductEngine, approx_count_product, encoded_lowest_digit, funny_product,
                               minplus, minplus_scaled, minplus_shifted, minplus_sparse_range,
                               minplus_with_counts, scaled_decode, scaled_encode, witness_count_product)
from tropapsp.semiring import INF, BoundViolation, EntryBounds, InvalidArgument, identity

ENGINES = ["brute", "blocked", "scaled"]


def _witness_ok(a, b, c, w):
    for i, j in zip(*np.nonzero(c != INF)):
        k = w[i, j]
        if a[i, k] + b[k, j] != c[i, j]:
            return False
    return True


@pytest.mark.parametrize("engine", ENGINES)
def test_small_hand_product(engine):
    c, w = minplus([[0, 1], [2, 3]], [[1, 0], [0, 1]], engine)
    assert c.tolist() == [[1, 0], [3, 2]]


@pytest.mark.parametrize("engine", ENGINES)
def test_identity_is_neutral(engine, rng):
    a = rand_dist(rng, (5, 5), 30)
    c, _ = minplus(a, identity(5), engine)
    assert (c == a).all()


@pytest.mark.parametrize("engine", ENGINES)
def test_random_against_loop_oracle(engine, rng):
    a = rand_dist(rng, (20, 15), 50)
    b = rand_dist(rng, (15, 20), 50)
    c, w = minplus(a, b, engine)
    assert (c == py_minplus(a, b)).all()
    assert _witness_ok(a, b, c, w)


def test_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        minplus(np.zeros((2, 3), np.int64), np.zeros((2, 3), np.int64))


def test_unknown_engine():
    with pytest.raises(InvalidArgument):
        ProductEngine("fast")
    with pytest.raises(InvalidArgument):
        ProductEngine("brute", t=0)


@given(st.integers(1, 7), st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_engines_agree(n1, n2, n3, seed):
    r = np.random.default_rng(seed)
    a, b = rand_dist(r, (n1, n2), 20, 0.3), rand_dist(r, (n2, n3), 20, 0.3)
    ref = py_minplus(a, b)
    for e in ENGINES:
        c, w = minplus(a, b, e)
        assert (c == ref).all()
        assert _witness_ok(a, b, c, w)


def test_scaled_encoding_hand_example():
    # 3**1 * 3**2 + 3**2 * 3**1 = 2 * 3**3
    enc_a, enc_b = scaled_encode(np.array([[1, 2]]), 3), scaled_encode(np.array([[2], [1]]), 3)
    p = enc_a.dot(enc_b)
    assert p[0, 0] == 2 * 3**3
    d, cnt = scaled_decode(p, 3)
    assert d[0, 0] == 3 and cnt[0, 0] == 2
    assert minplus_scaled([[1, 2]], [[2], [1]])[0, 0] == 3


def test_scaled_inf_column_contributes_nothing():
    a = np.array([[INF, 1]], dtype=np.int64)
    b = np.array([[0], [4]], dtype=np.int64)
    assert scaled_encode(a, 3)[0, 0] == 0
    assert minplus_scaled(a, b)[0, 0] == 5


def test_scaled_random_and_bound_violation(rng):
    a, b = rng.integers(0, 8, (16, 8)), rng.integers(0, 8, (8, 16))
    assert (minplus_scaled(a, b) == py_minplus(a, b)).all()
    with pytest.raises(BoundViolation):
        minplus_scaled(a, b, EntryBounds(max_finite_a=3, max_finite_b=7))


def test_encoded_lowest_digit_by_hand():
    # x**1 * 2 * x**2 * 3 = 6 x**3 ; base 10
    d, v = encoded_lowest_digit(np.array([[1]]), np.array([[2]]), np.array([[2]]), np.array([[3]]), 10)
    assert d[0, 0] == 3 and v[0, 0] == 6


def test_sparse_range_single_candidate(rng):
    a = rng.integers(0, 4, (6, 5))
    b = np.full((5, 6), INF, dtype=np.int64)
    for j in range(6):
        b[rng.integers(0, 5), j] = rng.integers(0, 100)
    wanted = [(i, j) for i in range(6) for j in range(6)]
    out = minplus_sparse_range(a, b, wanted, t=1)
    ref = py_minplus(a, b)
    assert all(out[c] == ref[c] for c in wanted)


def test_sparse_range_random(rng):
    a = rng.integers(0, 4, (32, 32))
    b = rand_dist(rng, (32, 32), 10**6, 0.75)
    wanted = [(i, j) for i in range(32) for j in range(32) if (i * 7 + j) % 3 == 0]
    out = minplus_sparse_range(a, b, wanted, t=4)
    ref = py_minplus(a, b)
    assert all(out[c] == ref[c] for c in wanted)


def test_sparse_range_empty_and_bad_t():
    assert minplus_sparse_range([[1]], [[1]], []) == {}
    with pytest.raises(InvalidArgument):
        minplus_sparse_range([[1]], [[1]], [(0, 0)], t=0)


def _graph_dists(rng, n):
    from tropapsp.generators import random_undirected
    from tropapsp.oracles import bfs_apsp
    return bfs_apsp(random_undirected(n, int(rng.integers(0, 10**6)), avg_degree=3))


def test_shifted_on_distance_submatrices(rng):
    for _ in range(5):
        d = _graph_dists(rng, 40)
        rows, mid, cols = rng.permutation(40)[:12], rng.permutation(40)[:10], rng.permutation(40)[:12]
        a, b = d[np.ix_(rows, mid)], d[np.ix_(mid, cols)]
        ell = int(a.max())
        assert (minplus_shifted(a, b, ell) == py_minplus(a, b)).all()


def test_shifted_single_finite_column():
    a = np.array([[INF, 2], [INF, 1]], dtype=np.int64)
    b = np.array([[0, 1], [3, 4]], dtype=np.int64)
    assert minplus_shifted(a, b, 2).tolist() == [[5, 6], [4, 5]]


def test_funny_product_hand_example():
    d, c = funny_product(([[0, 1]], [[2, 3]]), ([[5], [4]], [[1], [1]]))
    assert d[0, 0] == 5 and c[0, 0] == 5
    d, c = funny_product(([[0, 1]], [[2, 3]]), ([[5], [4]], [[1], [1]]), cap=3)
    assert c[0, 0] == 3


def test_funny_unit_counts_give_witness_count(rng):
    a, b = rand_dist(rng, (8, 6), 5), rand_dist(rng, (6, 8), 5)
    d, c = funny_product((a, np.ones_like(a)), (b, np.ones_like(b)))
    assert (d == py_minplus(a, b)).all()
    assert (c == witness_count_product(a, b)).all()


def test_witness_count_small():
    assert witness_count_product([[0, 0]], [[1], [1]])[0, 0] == 2
    assert witness_count_product([[0, 5]], [[1], [1]])[0, 0] == 1


def test_witness_count_random(rng):
    a, b = rand_dist(rng, (16, 16), 6), rand_dist(rng, (16, 16), 6)
    cnt = witness_count_product(a, b)
    ref = py_minplus(a, b)
    for i in range(16):
        for j in range(16):
            want = sum(1 for k in range(16) if a[i, k] != INF and b[k, j] != INF and a[i, k] + b[k, j] == ref[i, j])
            assert cnt[i, j] == want
    d, c2 = minplus_with_counts(a, b)
    assert (c2 == cnt).all() and ((cnt == 0) == (d == INF)).all()


def test_approx_count_uniform():
    out = approx_count_product(np.ones((1, 8)), np.ones((8, 1)), 10, [(0, 0)])
    assert 8 / 1.1 <= out[(0, 0)] <= 8 * 1.1


def _rel_err(a_int, b_int, out, cells):
    worst = 0
    for i, j in cells:
        exact = sum(int(a_int[i][k]) * int(b_int[k][j]) for k in range(len(b_int)))
        if exact:
            worst = max(worst, abs(Fraction(out[(i, j)]) - exact) / exact)
    return worst


def test_approx_count_dominant_term():
    a = [[2**40, 1, 1, 1]]
    b = [[1], [1], [1], [1]]
    out = approx_count_product(np.array(a, float), np.array(b, float), 100, [(0, 0)])
    assert _rel_err(a, b, out, [(0, 0)]) <= Fraction(1, 100)


def test_approx_count_random(rng):
    ea, eb = rng.integers(0, 31, (32, 32)), rng.integers(0, 31, (32, 32))
    a_int = [[2**int(x) if x % 4 else 0 for x in row] for row in ea]
    b_int = [[2**int(x) if x % 5 else 0 for x in row] for row in eb]
    cells = [(i, j) for i in range(32) for j in range(32)]
    out = approx_count_product(np.array(a_int, float), np.array(b_int, float), 100, cells)
    assert _rel_err(a_int, b_int, out, cells) <= Fraction(3, 100)


def test_approx_count_bad_t():
    with pytest.raises(InvalidArgument):
        approx_count_product(np.ones((1, 1)), np.ones((1, 1)), 10, [(0, 0)], t=0)
