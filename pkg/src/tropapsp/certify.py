"""Cheap exactness checks for the randomized solvers.

Every solver here only ever writes lengths of real paths, so its output is an
upper bound on the true distances.  An upper bound D with D[u,u] = 0 that also
satisfies D[u,v] <= D[u,x] + w(x,v) for every arc (x,v) is exactly the distance
matrix (induct along a shortest path).  The count check is the analogous
shortest-path-DAG recurrence.  Both are O(n*m), far below the solvers' cost, so
a failed hitting-set sample is detected and resampled instead of trusted.
"""
from __future__ import annotations

import numpy as np

from .graph import Graph
from .semiring import INF


def _relax(d: np.ndarray, s: np.ndarray, w: np.ndarray) -> np.ndarray:
    col = d[:, s]
    bad = col == INF
    return np.where(bad, INF, np.where(bad, 0, col) + w[None, :])


def bellman_certificate(g: Graph, d: np.ndarray) -> bool:
    d = np.asarray(d, dtype=np.int64)
    if np.any(np.diagonal(d) != 0):
        return False
    s, t, w, _, _ = g.arcs()
    if len(s) == 0:
        return True
    cand = _relax(d, s, w)                       # (n, arcs)
    best = np.full(d.shape, INF, dtype=np.int64)
    # scatter-min of the candidate through each arc head
    np.minimum.at(best.T, t, cand.T)
    return bool(np.all(d <= best))


def lex_certificate(g: Graph, d1: np.ndarray, d2: np.ndarray) -> bool:
    if np.any(np.diagonal(d1) != 0) or np.any(np.diagonal(d2) != 0):
        return False
    s, t, w1, w2, _ = g.arcs()
    if len(s) == 0:
        return True
    c1 = _relax(d1, s, w1)
    c2 = _relax(d2, s, w2)
    # encode the pair so that one scatter-min does the lexicographic compare
    fin = c1 != INF
    big = int(max(int(c2[fin].max()) if fin.any() else 0, int(d2[d2 != INF].max(initial=0)))) + 1
    top = int(max(int(c1[fin].max()) if fin.any() else 0, int(d1[d1 != INF].max(initial=0))))
    if (top + 1) * big >= INF:
        return _lex_certificate_slow(g, d1, d2)
    enc = np.where(fin, np.where(fin, c1, 0) * big + np.where(fin, c2, 0), INF)
    best = np.full(d1.shape, INF, dtype=np.int64)
    np.minimum.at(best.T, t, enc.T)
    dfin = d1 != INF
    cur = np.where(dfin, np.where(dfin, d1, 0) * big + np.where(dfin, d2, 0), INF)
    return bool(np.all(cur <= best))


def _lex_certificate_slow(g, d1, d2) -> bool:
    s, t, w1, w2, _ = g.arcs()
    for u in range(g.n):
        for a, b, x, y in zip(s.tolist(), t.tolist(), w1.tolist(), w2.tolist()):
            if d1[u, a] == INF:
                continue
            if (d1[u, b], d2[u, b]) > (d1[u, a] + x, d2[u, a] + y):
                return False
    return True


def count_certificate(g: Graph, d: np.ndarray, c: np.ndarray, combine) -> bool:
    """Check C[s,v] = combine(sum of C[s,x] over arcs (x,v) with D[s,x] + 1 = D[s,v])
    for unweighted graphs, given exact distances ``d``.  ``combine`` applies the
    counting mode (identity, cap or modulus) and works on object arrays."""
    n = g.n
    s, t, _, _, _ = g.arcs()
    fin = d != INF
    if np.any(np.diagonal(c) != combine(np.ones(n, dtype=object))):
        return False
    expect = np.zeros((n, n), dtype=object)
    cs = c[:, s]
    ok_arc = (d[:, s] != INF) & (d[:, t] != INF) & (d[:, s] + 1 == np.where(fin[:, t], d[:, t], -5))
    for e in range(len(s)):
        rows = ok_arc[:, e]
        if rows.any():
            expect[rows, t[e]] += cs[rows, e]
    expect = combine(expect)
    np.fill_diagonal(expect, combine(np.ones(n, dtype=object)))
    expect[~fin] = 0
    return bool(np.all(expect == c))
