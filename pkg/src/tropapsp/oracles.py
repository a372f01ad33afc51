"""Reference solvers used as test oracles and as the desk-scale Dijkstra passes."""
from __future__ import annotations

import heapq
from collections import deque
from fractions import Fraction

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra as _sp_dijkstra

from .graph import RED, Graph
from .semiring import INF, NegativeCycle


def _csr(g: Graph, weights=None, reverse: bool = False):
    """Sparse adjacency with the lightest arc per pair; zero weights are kept as
    explicit entries, which scipy's csgraph treats as edges."""
    s, t, w, _, _ = g.arcs()
    if weights is not None:
        w = weights
    if reverse:
        s, t = t, s
    if len(s) == 0:
        return sp.csr_matrix((g.n, g.n))
    order = np.lexsort((w, t, s))
    s, t, w = s[order], t[order], w[order]
    keep = np.ones(len(s), dtype=bool)
    keep[1:] = (s[1:] != s[:-1]) | (t[1:] != t[:-1])
    m = sp.csr_matrix((w[keep].astype(np.float64), (s[keep], t[keep])), shape=(g.n, g.n))
    return m


def _to_int(d: np.ndarray) -> np.ndarray:
    out = np.full(d.shape, INF, dtype=np.int64)
    fin = np.isfinite(d)
    out[fin] = np.rint(d[fin]).astype(np.int64)
    return out


def dijkstra_from(g: Graph, sources, weights=None, reverse: bool = False) -> np.ndarray:
    """Distances from each source (rows) to every vertex; non-negative weights."""
    sources = np.asarray(sources, dtype=np.int64)
    if sources.size == 0:
        return np.zeros((0, g.n), dtype=np.int64)
    # both orientations are already in the matrix; undirected mode would symmetrize
    d = _sp_dijkstra(_csr(g, weights, reverse), directed=True, indices=sources)
    return _to_int(np.atleast_2d(d))


def bfs_apsp(g: Graph) -> np.ndarray:
    adj = [[] for _ in range(g.n)]
    s, t, _, _, _ = g.arcs()
    for a, b in zip(s.tolist(), t.tolist()):
        adj[a].append(b)
    d = np.full((g.n, g.n), INF, dtype=np.int64)
    for src in range(g.n):
        row = d[src]
        row[src] = 0
        q = deque([src])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if row[y] == INF:
                    row[y] = row[x] + 1
                    q.append(y)
    return d


@numba.njit(cache=True)
def _floyd(d):
    n = d.shape[0]
    inf = np.iinfo(np.int64).max
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            if dik == inf:
                continue
            for j in range(n):
                dkj = d[k, j]
                if dkj == inf:
                    continue
                s = dik + dkj
                if s < d[i, j]:
                    d[i, j] = s
    return d


def floyd_warshall(g: Graph) -> np.ndarray:
    d = _floyd(g.weight_matrix().copy())
    if np.any(np.diagonal(d) < 0):
        raise NegativeCycle(find_negative_cycle(g))
    return d


@numba.njit(cache=True)
def _bellman_ford(n, src, s, t, w, dist, pred):
    inf = np.iinfo(np.int64).max
    for it in range(n):
        changed = False
        for e in range(len(s)):
            a = dist[s[e]]
            if a == inf:
                continue
            c = a + w[e]
            if c < dist[t[e]]:
                dist[t[e]] = c
                pred[t[e]] = s[e]
                changed = True
                if it == n - 1:
                    return t[e]
        if not changed:
            return -1
    return -1


def find_negative_cycle(g: Graph):
    """Vertices of some negative cycle, or [] if none."""
    s, t, w, _, _ = g.arcs()
    n = g.n
    # virtual source: every vertex starts at distance 0
    dist = np.zeros(n, dtype=np.int64)
    pred = np.full(n, -1, dtype=np.int64)
    x = _bellman_ford(n + 1, -1, s, t, w, dist, pred)
    if x < 0:
        return []
    for _ in range(n):
        x = pred[x]
    cyc = [int(x)]
    y = pred[x]
    while y != x:
        cyc.append(int(y))
        y = pred[y]
    return cyc[::-1]


def potentials(g: Graph) -> np.ndarray:
    """Bellman-Ford potentials h with w(u,v) + h(u) - h(v) >= 0."""
    s, t, w, _, _ = g.arcs()
    dist = np.zeros(g.n, dtype=np.int64)
    pred = np.full(g.n, -1, dtype=np.int64)
    if _bellman_ford(g.n + 1, -1, s, t, w, dist, pred) >= 0:
        raise NegativeCycle(find_negative_cycle(g))
    return dist


def bellman_ford_apsp(g: Graph) -> np.ndarray:
    s, t, w, _, _ = g.arcs()
    d = np.full((g.n, g.n), INF, dtype=np.int64)
    for src in range(g.n):
        dist = np.full(g.n, INF, dtype=np.int64)
        dist[src] = 0
        pred = np.full(g.n, -1, dtype=np.int64)
        if _bellman_ford(g.n, src, s, t, w, dist, pred) >= 0:
            raise NegativeCycle(find_negative_cycle(g))
        d[src] = dist
    return d


def johnson_apsp(g: Graph) -> np.ndarray:
    h = potentials(g)
    s, t, w, _, _ = g.arcs()
    rw = w + h[s] - h[t]
    d = dijkstra_from(g, np.arange(g.n), weights=rw)
    fin = d != INF
    out = np.full_like(d, INF)
    out[fin] = (d - h[:, None] + h[None, :])[fin]
    return out


def oracle_apsp(g: Graph) -> np.ndarray:
    """Exact distances: BFS if unweighted, Dijkstra if non-negative, else Johnson."""
    if g.m == 0:
        d = np.full((g.n, g.n), INF, dtype=np.int64)
        np.fill_diagonal(d, 0)
        return d
    if g.is_unweighted():
        return bfs_apsp(g)
    if g.w.min() >= 0:
        return dijkstra_from(g, np.arange(g.n))
    return johnson_apsp(g)


def lex_dijkstra_apsp(g: Graph):
    """Lexicographic (sum w1, sum w2) distances by Dijkstra on pairs."""
    adj = g.out_lists()
    n = g.n
    d1 = np.full((n, n), INF, dtype=np.int64)
    d2 = np.full((n, n), INF, dtype=np.int64)
    for src in range(n):
        best = {src: (0, 0)}
        heap = [(0, 0, src)]
        done = set()
        while heap:
            a, b, x = heapq.heappop(heap)
            if x in done:
                continue
            done.add(x)
            d1[src, x], d2[src, x] = a, b
            for y, w1, w2, _ in adj[x]:
                cand = (a + w1, b + w2)
                if y not in done and (y not in best or cand < best[y]):
                    best[y] = cand
                    heapq.heappush(heap, (cand[0], cand[1], y))
    return d1, d2


def oracle_count(g: Graph):
    """Distances and exact (Python int) shortest-path counts by per-source BFS DP."""
    adj = [[] for _ in range(g.n)]
    s, t, _, _, _ = g.arcs()
    for a, b in zip(s.tolist(), t.tolist()):
        adj[a].append(b)
    n = g.n
    d = np.full((n, n), INF, dtype=np.int64)
    c = np.zeros((n, n), dtype=object)
    for src in range(n):
        dist = [-1] * n
        cnt = [0] * n
        dist[src] = 0
        cnt[src] = 1
        q = deque([src])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    q.append(y)
                if dist[y] == dist[x] + 1:
                    cnt[y] += cnt[x]
        for v in range(n):
            if dist[v] >= 0:
                d[src, v] = dist[v]
                c[src, v] = cnt[v]
    return d, c


def brandes_exact(g: Graph) -> list:
    """Betweenness of every vertex as exact fractions (ordered pairs s != t)."""
    adj = [[] for _ in range(g.n)]
    s_, t_, _, _, _ = g.arcs()
    for a, b in zip(s_.tolist(), t_.tolist()):
        adj[a].append(b)
    n = g.n
    bc = [Fraction(0)] * n
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [Fraction(0)] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += Fraction(sigma[v], sigma[w]) * (1 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def budgeted_apsp(g: Graph, c: int) -> np.ndarray:
    """Shortest distances over paths with at most ``c`` red edges, by Dijkstra
    over (vertex, reds used) states."""
    adj = g.out_lists()
    n = g.n
    out = np.full((n, n), INF, dtype=np.int64)
    for src in range(n):
        best = {}
        heap = [(0, 0, src)]
        while heap:
            d, r, x = heapq.heappop(heap)
            if (x, r) in best:
                continue
            best[(x, r)] = d
            if d < out[src, x]:
                out[src, x] = d
            for y, w, _, col in adj[x]:
                r2 = r + (1 if col == RED else 0)
                if r2 <= c and (y, r2) not in best:
                    heapq.heappush(heap, (d + w, r2, y))
    return out


def vertex_weighted_apsp(g: Graph) -> np.ndarray:
    """Path weight = sum of vertex weights on the path, endpoints included."""
    vw = g.vweights
    s, t, _, _, _ = g.arcs()
    d = dijkstra_from(g, np.arange(g.n), weights=vw[t])
    fin = d != INF
    out = np.full_like(d, INF)
    out[fin] = (d + vw[:, None])[fin]
    return out


def dag_longest_paths(g: Graph) -> np.ndarray:
    """All-pairs longest paths in a DAG (-INF encoded as INF = unreachable)."""
    n = g.n
    adj = [[] for _ in range(n)]
    indeg = [0] * n
    for a, b, w in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
        adj[a].append((b, w))
        indeg[b] += 1
    order = []
    q = deque(i for i in range(n) if indeg[i] == 0)
    while q:
        x = q.popleft()
        order.append(x)
        for y, _ in adj[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                q.append(y)
    if len(order) != n:
        raise ValueError("graph has a cycle")
    pos = {v: i for i, v in enumerate(order)}
    out = np.full((n, n), INF, dtype=np.int64)
    for src in range(n):
        best = [None] * n
        best[src] = 0
        for x in order[pos[src]:]:
            if best[x] is None:
                continue
            for y, w in adj[x]:
                if best[y] is None or best[x] + w > best[y]:
                    best[y] = best[x] + w
        for v in range(n):
            if best[v] is not None:
                out[src, v] = best[v]
    return out
