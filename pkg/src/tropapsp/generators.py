"""Seeded instance generators.  The same (kind, size, seed) always gives the
same instance."""
from __future__ import annotations

import numpy as np

from .graph import BLUE, RED, Graph
from .semiring import InvalidArgument

KINDS = ("random-digraph", "random-undirected", "colored", "dual-weight", "bigcount-layered", "minplus")


def _pairs(rng, n, m):
    """m random ordered pairs without self-loops (repeats possible)."""
    if n < 2 or m <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    u = rng.integers(0, n, m)
    v = (u + rng.integers(1, n, m)) % n
    return u, v


def _simple(u, v, directed):
    seen = set()
    out = []
    for a, b in zip(u.tolist(), v.tolist()):
        key = (a, b) if directed else (min(a, b), max(a, b))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def random_digraph(n: int, seed: int = 0, avg_degree: float = 3.0, weights=(1, 1)) -> Graph:
    rng = np.random.default_rng(seed)
    u, v = _pairs(rng, n, int(round(avg_degree * n)))
    edges = _simple(u, v, True)
    lo, hi = weights
    w = rng.integers(lo, hi + 1, len(edges))
    return Graph(n, [(a, b, int(x)) for (a, b), x in zip(edges, w)], directed=True)


def random_undirected(n: int, seed: int = 0, avg_degree: float = 3.0, connected: bool = True,
                      weights=(1, 1)) -> Graph:
    """Random simple undirected graph; ``connected`` adds a random spanning tree."""
    rng = np.random.default_rng(seed)
    u, v = _pairs(rng, n, int(round(avg_degree * n / 2)))
    if connected and n > 1:
        perm = rng.permutation(n)
        par = np.array([perm[rng.integers(0, i)] for i in range(1, n)])
        u = np.concatenate([u, perm[1:]])
        v = np.concatenate([v, par])
    edges = _simple(u, v, False)
    lo, hi = weights
    w = rng.integers(lo, hi + 1, len(edges))
    return Graph(n, [(a, b, int(x)) for (a, b), x in zip(edges, w)], directed=False)


def colored(n: int, seed: int = 0, avg_degree: float = 3.0, red_fraction: float = 0.3,
            directed: bool = False, weights=(1, 1)) -> Graph:
    rng = np.random.default_rng(seed)
    g = (random_digraph if directed else random_undirected)(n, seed, avg_degree, weights=weights)
    col = np.where(rng.random(g.m) < red_fraction, RED, BLUE)
    return Graph(n, list(zip(g.u.tolist(), g.v.tolist(), g.w.tolist())), directed=g.directed,
                 color=col.tolist())


def dual_weight(n: int, seed: int = 0, avg_degree: float = 3.0, w1=(0, 2), w2=(0, 3),
                directed: bool = True) -> Graph:
    rng = np.random.default_rng(seed)
    u, v = _pairs(rng, n, int(round(avg_degree * n)))
    edges = _simple(u, v, directed)
    a = rng.integers(w1[0], w1[1] + 1, len(edges))
    b = rng.integers(w2[0], w2[1] + 1, len(edges))
    return Graph(n, [(x, y, int(p)) for (x, y), p in zip(edges, a)], directed=directed,
                 w2=b.tolist())


def bigcount_layered(n: int, seed: int = 0, tail_edges: int | None = None) -> Graph:
    """n//3 layers of two vertices joined by complete bipartite arcs, then two
    layers of n//6 vertices; the last two layers are joined by a perfect
    matching plus ``tail_edges`` random arcs.  End-to-end counts reach about
    n/3 bits."""
    if n < 6:
        raise InvalidArgument("bigcount-layered needs n >= 6")
    rng = np.random.default_rng(seed)
    k = n // 3
    h = (n - 2 * k) // 2
    layers = [[2 * i, 2 * i + 1] for i in range(k)]
    nxt = 2 * k
    layers.append(list(range(nxt, nxt + h)))
    layers.append(list(range(nxt + h, nxt + 2 * h)))
    edges = []
    for a, b in zip(layers[:-2], layers[1:-1]):
        edges += [(x, y) for x in a for y in b]
    p, q = layers[-2], layers[-1]
    edges += list(zip(p, q))
    extra = h if tail_edges is None else tail_edges
    for _ in range(extra):
        edges.append((p[rng.integers(0, h)], q[rng.integers(0, h)]))
    edges = sorted(set(edges))
    return Graph(nxt + 2 * h, edges, directed=True)


def stacked_layers(layers: int, width: int = 2) -> Graph:
    """A source, ``layers`` layers of ``width`` vertices with complete bipartite
    arcs between consecutive layers, and a sink: width**layers paths end to end."""
    n = layers * width + 2
    edges = [(0, 1 + j) for j in range(width)]
    for i in range(layers - 1):
        a = 1 + i * width
        edges += [(a + x, a + width + y) for x in range(width) for y in range(width)]
    last = 1 + (layers - 1) * width
    edges += [(last + j, n - 1) for j in range(width)]
    return Graph(n, edges, directed=True)


def minplus_instance(n1: int, n2: int, n3: int, M: int, seed: int = 0):
    """Random A (n1 x n2) and B (n2 x n3) with entries in [1, M]."""
    if M < 1:
        raise InvalidArgument("M must be >= 1")
    rng = np.random.default_rng(seed)
    return (rng.integers(1, M + 1, (n1, n2)).astype(np.int64),
            rng.integers(1, M + 1, (n2, n3)).astype(np.int64))


def generate(kind: str, size: int, seed: int = 0):
    """A Graph, or for ``minplus`` a pair (A, B) of shape size x size/2 x size
    with M = 6."""
    if kind == "random-digraph":
        return random_digraph(size, seed)
    if kind == "random-undirected":
        return random_undirected(size, seed)
    if kind == "colored":
        return colored(size, seed)
    if kind == "dual-weight":
        return dual_weight(size, seed)
    if kind == "bigcount-layered":
        return bigcount_layered(size, seed)
    if kind == "minplus":
        return minplus_instance(size, max(1, size // 2), size, 6, seed)
    raise InvalidArgument(f"unknown generator kind {kind!r}; expected one of {', '.join(KINDS)}")
