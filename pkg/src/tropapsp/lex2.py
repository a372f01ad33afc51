"""Lexicographic two-weight APSP: minimize total w1, then total w2.

Three solvers share the pair encoding ``d1 * S + d2`` (S a power of two above
every d2 that can occur in the product) and the slice view
``DD_k[u, v] = d2[u, v]`` where ``d1[u, v] = k``:

* :func:`lex2_directed` climbs and then descends hop levels with products
  whose first factor is split by its d1 value, so every split has small
  entries and goes through the sparse range product.  Pairs with long hop
  counts are finished by Dijkstra from a small hitting set.
* :func:`lex2_undirected_positive` splits sources by degree.  High-degree
  sources are grouped around a dominating set and solved per group with
  banded slice products; low-degree sources run Dijkstra on a sparse graph
  with shortcut edges.
* :func:`lex2_gamma` builds slices at the distances floor(gamma*j*2^i) + b by
  doubling and then fills in the odd multiples level by level.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra as _sp_dijkstra

from .certify import lex_certificate
from .graph import (Graph, RetrySample, level_schedule, resampling, sample_hitting_sets,
                    select_gamma)
from .products import minplus, minplus_sparse_range_masked
from .semiring import INF, ToolkitError, ValidationError


class Lex2Result(NamedTuple):
    d1: np.ndarray
    d2: np.ndarray


def _pow2_above(x: int) -> int:
    return 1 << (int(x).bit_length())


def _encode(d1, d2, s):
    fin = d1 != INF
    return np.where(fin, np.where(fin, d1, 0) * s + np.where(fin, d2, 0), INF)


def _decode(e, s):
    fin = e != INF
    ev = np.where(fin, e, 0)
    return np.where(fin, ev // s, INF), np.where(fin, ev % s, INF)


def _lex_less(a1, a2, b1, b2):
    return (a1 < b1) | ((a1 == b1) & (a2 < b2))


def _check_weights(g: Graph, positive: bool):
    s, t, w1, w2, _ = g.arcs()
    if len(s) and (w1.min() < 0 or w2.min() < 0):
        raise ValidationError("lexicographic solvers need non-negative weights")
    if positive and len(s) and w1.min() == 0:
        raise ValidationError("this solver needs strictly positive primary weights")
    c0 = max(1, int(w1.max())) if len(s) else 1
    c2 = max(1, int(w2.max())) if len(s) else 1
    return c0, c2


def _encoded_csr(n, s, t, w):
    """CSR adjacency keeping the lightest parallel arc; zero weights stay explicit."""
    if len(s) == 0:
        return sp.csr_matrix((n, n))
    order = np.lexsort((w, t, s))
    s, t, w = s[order], t[order], w[order]
    keep = np.ones(len(s), dtype=bool)
    keep[1:] = (s[1:] != s[:-1]) | (t[1:] != t[:-1])
    return sp.csr_matrix((w[keep].astype(np.float64), (s[keep], t[keep])), shape=(n, n))


def _lex_dijkstra(g: Graph, sources, scale: int, reverse: bool = False):
    """Lexicographic distances from (or, reversed, to) each source via one scalar
    Dijkstra on the encoded weights w1 * scale + w2."""
    s, t, w1, w2, _ = g.arcs()
    n = g.n
    if (int(w1.max(initial=0)) * n + 1) * scale >= 2**53:
        raise ToolkitError("encoded weights exceed exact float range")
    if reverse:
        s, t = t, s
    csr = _encoded_csr(n, s, t, w1 * scale + w2)
    sources = np.asarray(sources, dtype=np.int64)
    d = np.atleast_2d(_sp_dijkstra(csr, directed=True, indices=sources))
    e = np.full(d.shape, INF, dtype=np.int64)
    fin = np.isfinite(d)
    e[fin] = np.rint(d[fin]).astype(np.int64)
    return _decode(e, scale)


def _lex_product(a1, a2, b1, b2, cap_a, cap_b, mask, t, engine):
    """Lexicographic product restricted to ``mask``.  Entries of either factor
    beyond its (d1, d2) cap are dropped.  The first factor is split by d1 value
    so each piece holds only d2 values; the second factor is encoded."""
    a_ok = (a1 != INF) & (a1 <= cap_a[0]) & (a2 <= cap_a[1])
    b_ok = (b1 != INF) & (b1 <= cap_b[0]) & (b2 <= cap_b[1])
    n1, n3 = a1.shape[0], b1.shape[1]
    out1 = np.full((n1, n3), INF, dtype=np.int64)
    out2 = np.full((n1, n3), INF, dtype=np.int64)
    if not a_ok.any() or not b_ok.any():
        return out1, out2
    scale = _pow2_above(int(a2[a_ok].max()) + int(b2[b_ok].max()))
    top = int(a1[a_ok].max()) + int(b1[b_ok].max()) + 1
    if top * scale >= INF // 4:
        raise ToolkitError("pair encoding would overflow")
    benc = np.where(b_ok, _encode(np.where(b_ok, b1, 0), b2, scale), INF)
    best = np.full((n1, n3), INF, dtype=np.int64)
    for val in np.unique(a1[a_ok]):
        piece = np.where(a_ok & (a1 == val), a2, INF)
        r = minplus_sparse_range_masked(piece, benc, mask, t, engine=engine)
        cand = np.where(r != INF, r + int(val) * scale, INF)
        np.minimum(best, cand, out=best)
    return _decode(best, scale)


def _merge(d1, d2, rows, cols, n1, n2):
    """Lexicographic min of (n1, n2) into the block d[rows][:, cols]."""
    blk1 = d1[np.ix_(rows, cols)]
    blk2 = d2[np.ix_(rows, cols)]
    better = _lex_less(n1, n2, blk1, blk2)
    blk1[better] = n1[better]
    blk2[better] = n2[better]
    d1[np.ix_(rows, cols)] = blk1
    d2[np.ix_(rows, cols)] = blk2


# ----------------------------------------------------------- directed, hops

def lex2_directed(g: Graph, L: int | None = None, seed: int = 0, c: float = 4.0,
                  t: int | None = None, retries: int = 16, engine=None,
                  telemetry: dict | None = None) -> Lex2Result:
    """Exact lexicographic distances; zero weights allowed.

    Hop levels up to ``L`` (default ``ceil(n**0.342)``) are handled by
    products, longer hop counts by Dijkstra from the level-L hitting set.
    The result is certified and resampled on failure.
    """
    c0, c2 = _check_weights(g, positive=False)
    n = g.n
    if L is None:
        L = max(2, math.ceil(n ** 0.342))
    L = max(1, min(int(L), max(n - 1, 1)))
    if t is None:
        t = max(1, n // L)
    lv = level_schedule(L)
    top = lv[-1]
    base1, base2 = g.lex_weight_matrices()
    allv = np.arange(n)
    full = np.ones((n, n), dtype=bool)

    def attempt(sd):
        samples = sample_hitting_sets(n, lv, sd, c)
        rset = {ell: samples[ell].vertices for ell in lv}
        rset[1] = allv
        d1, d2 = base1.copy(), base2.copy()
        # ascending: exact for R_l x V and V x R_l up to l hops
        for k in range(1, len(lv)):
            ell, prev = lv[k], lv[k - 1]
            r, rp = rset[ell], rset[prev]
            if r.size == 0 or rp.size == 0:
                continue
            cap = (c0 * prev, c2 * prev)
            p1, p2 = _lex_product(d1[np.ix_(r, rp)], d2[np.ix_(r, rp)], d1[rp], d2[rp],
                                  cap, cap, full[:r.size], t, engine)
            _merge(d1, d2, r, allv, p1, p2)
            p1, p2 = _lex_product(d1[:, rp], d2[:, rp], d1[np.ix_(rp, r)], d2[np.ix_(rp, r)],
                                  cap, cap, full[:, :r.size], t, engine)
            _merge(d1, d2, allv, r, p1, p2)
        # descending: exact for R_l' x V up to L hops
        for k in range(len(lv) - 1, 0, -1):
            ell, prev = lv[k], lv[k - 1]
            rows, mids = rset[prev], rset[ell]
            if rows.size == 0 or mids.size == 0:
                continue
            p1, p2 = _lex_product(d1[np.ix_(rows, mids)], d2[np.ix_(rows, mids)],
                                  d1[mids], d2[mids], (c0 * ell, c2 * ell),
                                  (c0 * top, c2 * top), full[:rows.size], t, engine)
            _merge(d1, d2, rows, allv, p1, p2)
        # long hop counts pass through R_top
        rt = rset[top]
        if rt.size:
            scale = _pow2_above(c2 * n)
            f1, f2 = _lex_dijkstra(g, rt, scale)
            _merge(d1, d2, rt, allv, f1, f2)
            b1, b2 = _lex_dijkstra(g, rt, scale, reverse=True)
            _merge(d1, d2, allv, rt, b1.T, b2.T)
            s2 = _pow2_above(2 * c2 * n)
            left = _encode(d1[:, rt], d2[:, rt], s2)
            right = _encode(d1[rt], d2[rt], s2)
            p1, p2 = _decode(minplus(left, right, "brute", with_witness=False), s2)
            _merge(d1, d2, allv, allv, p1, p2)
        if not lex_certificate(g, d1, d2):
            raise RetrySample("lexicographic certificate failed")
        return Lex2Result(d1, d2)

    return resampling(attempt, seed, retries, telemetry)


# ------------------------------------------------------------ slice helpers

def _arc_slices(g: Graph, c0: int):
    """W2 matrix per primary weight w: lightest w2 over arcs with w1 = w."""
    s, t, w1, w2, _ = g.arcs()
    out = {}
    for w in range(1, c0 + 1):
        m = np.full((g.n, g.n), INF, dtype=np.int64)
        sel = w1 == w
        if sel.any():
            order = np.argsort(-w2[sel], kind="stable")
            m[s[sel][order], t[sel][order]] = w2[sel][order]
        out[w] = m
    return out


def _slice_dp(d1, arcw, c0, upto, engine=None):
    """Slices DD_0..DD_upto by extending the last arc: DD_k = min_w DD_{k-w} * W_w,
    kept where d1 = k.  Needs strictly positive primary weights."""
    n = d1.shape[0]
    slices = {}
    dd0 = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(dd0, 0)
    slices[0] = dd0
    for k in range(1, upto + 1):
        want = d1 == k
        best = np.full((n, n), INF, dtype=np.int64)
        if want.any():
            for w in range(1, min(c0, k) + 1):
                np.minimum(best, minplus(slices[k - w], arcw[w], engine, with_witness=False), out=best)
        slices[k] = np.where(want, best, INF)
    return slices


def _primary_distances(g: Graph):
    from .oracles import dijkstra_from
    return dijkstra_from(g, np.arange(g.n))


# --------------------------------------------------- undirected, positive w1

def greedy_dominating_set(adj: np.ndarray, targets: np.ndarray) -> list[int]:
    """Greedy closed-neighborhood cover of ``targets``; ties go to the lowest index."""
    n = adj.shape[0]
    closed = adj | np.eye(n, dtype=bool)
    uncovered = np.zeros(n, dtype=bool)
    uncovered[targets] = True
    chosen = []
    while uncovered.any():
        gain = (closed & uncovered[None, :]).sum(axis=1)
        x = int(np.argmax(gain))
        chosen.append(x)
        uncovered &= ~closed[x]
    return chosen


def _pick_band(ds, ell, prev, c0, cc):
    lo = max(ell - prev + c0 - 1, c0)
    hi = prev
    if lo > hi:
        raise ToolkitError(f"no valid split index for level {ell}")
    pref = [m for m in range(lo, hi + 1) if 0.4 * ell <= m <= 0.6 * ell]
    cands = pref or list(range(lo, hi + 1))
    fin = ds != INF

    def size(m):
        band = fin & (ds >= m - c0 - cc) & (ds <= m + cc)
        return int(band.sum())

    return min(cands, key=lambda m: (size(m), m))


def _cluster_solve(S, s, d1, d2, ell, prev, c0, engine):
    """Fill d2[u, v] for u in S and d1[u, v] in (prev, ell] from slice products
    through the band at primary distance m from the centre ``s``."""
    cc = 2 * c0
    ds = d1[s]
    fin = ds != INF

    def band(i):
        return np.nonzero(fin & (np.abs(np.where(fin, ds, 0) - i) <= cc))[0]

    # every target of a cluster member lies in the band of its distance
    sub = d1[S]
    tgt = (sub > prev) & (sub <= ell) & (sub != INF)
    if tgt.any():
        uu, vv = np.nonzero(tgt)
        if not fin[vv].all() or np.any(np.abs(ds[vv] - sub[uu, vv]) > cc):
            raise ToolkitError("band containment violated")
    else:
        return
    m = _pick_band(ds, ell, prev, c0, cc)
    cols_v, cols_i = [], []
    for i in range(prev + 1, ell + 1):
        b = band(i)
        cols_v.append(b)
        cols_i.append(np.full(b.size, i, dtype=np.int64))
    colv = np.concatenate(cols_v)
    coli = np.concatenate(cols_i)
    if colv.size == 0:
        return
    best = np.full((len(S), colv.size), INF, dtype=np.int64)
    for delta in range(c0):
        q = m - delta
        Y = band(q)
        if Y.size == 0:
            continue
        f = np.where(d1[np.ix_(S, Y)] == q, d2[np.ix_(S, Y)], INF)
        gd1 = d1[np.ix_(Y, colv)]
        gm = np.where(gd1 == (coli - q)[None, :], d2[np.ix_(Y, colv)], INF)
        np.minimum(best, minplus(f, gm, engine, with_witness=False), out=best)
    hit = d1[np.ix_(S, colv)] == coli[None, :]
    uu, cc_ = np.nonzero(hit)
    d2[np.asarray(S)[uu], colv[cc_]] = best[uu, cc_]


def lex2_undirected_positive(g: Graph, L: int | None = None, degree_threshold: float | None = None,
                             engine=None, telemetry: dict | None = None) -> Lex2Result:
    """Exact lexicographic distances on an undirected graph with w1 >= 1.

    Vertices of degree above ``degree_threshold`` (default n/L with
    ``L = ceil(n**0.42)``) are covered by a greedy dominating set and solved in
    groups; the rest run Dijkstra on the edges touching low-degree vertices
    plus shortcut edges to every high-degree vertex.
    """
    g.require_undirected("lex2_undirected_positive")
    c0, c2 = _check_weights(g, positive=True)
    n = g.n
    if L is None:
        L = max(1, math.ceil(n ** 0.42))
    if degree_threshold is None:
        degree_threshold = n / L
    group_size = max(1, math.ceil(n / L))
    d1 = _primary_distances(g)
    adj = g.adjacency()
    deg = adj.sum(axis=1)
    high = np.nonzero(deg > degree_threshold)[0]
    low = np.nonzero(deg <= degree_threshold)[0]
    is_low = np.zeros(n, dtype=bool)
    is_low[low] = True
    maxd = int(d1[d1 != INF].max(initial=0))
    arcw = _arc_slices(g, c0)
    base = min(maxd, 4 * c0 + 4)
    slices = _slice_dp(d1, arcw, c0, base, engine)
    d2 = np.full((n, n), INF, dtype=np.int64)
    for k, m in slices.items():
        sel = m != INF
        d2[sel] = m[sel]
    groups = []
    if high.size:
        covered = np.zeros(n, dtype=bool)
        for x in greedy_dominating_set(adj, high):
            nb = np.nonzero((adj[x] | (np.arange(n) == x)) & ~covered)[0]
            nb = nb[np.isin(nb, high)]
            covered[nb] = True
            for s0 in range(0, nb.size, group_size):
                groups.append(nb[s0:s0 + group_size])
    s_, t_, w1_, w2_, _ = g.arcs()
    keep = is_low[s_] | is_low[t_]
    ls, lt, lw1, lw2 = s_[keep], t_[keep], w1_[keep], w2_[keep]
    scale = _pow2_above(c2 * n)
    if (c0 * n + 1) * scale >= 2**53:
        raise ToolkitError("encoded weights exceed exact float range")
    stats = {"high": int(high.size), "groups": len(groups), "levels": []}
    prev = base
    while prev < maxd:
        ell = max(prev + 1, int(math.floor(1.5 * prev)))
        stats["levels"].append(ell)
        for S in groups:
            _cluster_solve(S, int(S[0]), d1, d2, ell, prev, c0, engine)
        d2[:, high] = d2[high].T
        for u in low:
            hz = high[(d1[high, u] <= ell)]
            ss = np.concatenate([ls, np.full(hz.size, u)])
            tt = np.concatenate([lt, hz])
            ww = np.concatenate([lw1 * scale + lw2, d1[hz, u] * scale + d2[hz, u]])
            dist = _sp_dijkstra(_encoded_csr(n, ss, tt, ww), directed=True, indices=int(u))
            row = d1[u]
            sel = (row > prev) & (row <= ell) & (row != INF)
            vals = np.rint(dist[sel]).astype(np.int64)
            if np.any(vals // scale != row[sel]):
                raise ToolkitError("shortcut graph distance disagrees with primary distance")
            d2[u, sel] = vals % scale
        d2[:, low] = d2[low].T
        prev = ell
    if telemetry is not None:
        telemetry.update(stats)
    return Lex2Result(d1, d2)


# ---------------------------------------------------------- gamma-scaled

def _floor_mul(gamma: Fraction, x: int) -> int:
    return (gamma.numerator * x) // gamma.denominator


def lex2_gamma(g: Graph, c: float = 4.0, t: int | None = None, engine=None,
               telemetry: dict | None = None) -> Lex2Result:
    """Exact lexicographic distances for w1 >= 1 through slices at the
    distances floor(gamma*j*2^i) + b, |b| <= 4*c0."""
    c0, c2 = _check_weights(g, positive=True)
    n = g.n
    d1 = _primary_distances(g)
    maxd = int(d1[d1 != INF].max(initial=0))
    K = 4 * c0
    gs = select_gamma(d1, n, c=c, window=K, c0=c0)
    gamma = gs.gamma
    arcw = _arc_slices(g, c0)
    base = min(maxd, 12 * c0 + 4)
    slices = _slice_dp(d1, arcw, c0, base, engine)
    empty = np.full((n, n), INF, dtype=np.int64)
    if t is None:
        t = max(1, int(math.isqrt(n)))

    def sl(k):
        if k < 0 or k > maxd:
            return empty
        if k not in slices:
            raise ToolkitError(f"slice {k} requested before it was built")
        return slices[k]

    top_i = 0
    while _floor_mul(gamma, 2**top_i) <= maxd + K:
        top_i += 1
    # doubling at floor(gamma*2^i) + b
    for i in range(1, top_i + 1):
        h = _floor_mul(gamma, 2 ** (i - 1))
        gi = _floor_mul(gamma, 2**i)
        e = gi - 2 * h
        for b in range(-K, K + 1):
            tgt = gi + b
            if tgt < 0 or tgt > maxd or tgt in slices:
                continue
            want = d1 == tgt
            best = np.full((n, n), INF, dtype=np.int64)
            if want.any():
                for delta in range(c0):
                    f = sl(h + b // 2 - delta + e)
                    gm = sl(h + (b + 1) // 2 + delta)
                    np.minimum(best, minplus_sparse_range_masked(f, gm, want, t, engine=engine), out=best)
            slices[tgt] = np.where(want, best, INF)
    # odd multiples, coarse to fine; even multiples come from the level above
    for i in range(top_i, -1, -1):
        gi = _floor_mul(gamma, 2**i)
        js = []
        j = 3
        while _floor_mul(gamma, j * 2**i) - K <= maxd:
            js.append(j)
            j += 2
        for b in range(-K, K + 1):
            todo = [j for j in js if 0 <= _floor_mul(gamma, j * 2**i) + b <= maxd
                    and _floor_mul(gamma, j * 2**i) + b not in slices]
            if not todo:
                continue
            tg = [_floor_mul(gamma, j * 2**i) + b for j in todo]
            wants = [d1 == x for x in tg]
            best = np.full((len(todo) * n, n), INF, dtype=np.int64)
            stack_mask = np.concatenate(wants, axis=0)
            if stack_mask.any():
                for delta in range(c0):
                    gm = sl(gi + (b + 1) // 2 + delta)
                    fs = []
                    for j in todo:
                        fj = _floor_mul(gamma, j * 2**i)
                        fm = _floor_mul(gamma, (j - 1) * 2**i)
                        e = fj - fm - gi
                        fs.append(sl(fm + b // 2 - delta + e))
                    stack = np.concatenate(fs, axis=0)
                    # second factor has the small entries: multiply transposes
                    r = minplus_sparse_range_masked(gm.T.copy(), stack.T.copy(), stack_mask.T.copy(),
                                                    t, engine=engine)
                    np.minimum(best, r.T, out=best)
            for q, x in enumerate(tg):
                slices[x] = np.where(wants[q], best[q * n:(q + 1) * n], INF)
    d2 = np.full((n, n), INF, dtype=np.int64)
    for k in range(0, maxd + 1):
        m = sl(k)
        sel = d1 == k
        d2[sel] = m[sel]
    if np.any((d1 != INF) & (d2 == INF)):
        raise ToolkitError("some finite pair was not reached by any slice")
    if telemetry is not None:
        telemetry.update({"gamma": gamma, "level_counts": gs.level_counts,
                          "level_bounds": gs.level_bounds})
    return Lex2Result(d1, d2)


# ------------------------------------------------------------- wrappers

def _dispatch(g: Graph, **kw) -> Lex2Result:
    s, t, w1, _, _ = g.arcs()
    if not g.directed and (len(w1) == 0 or w1.min() >= 1):
        return lex2_undirected_positive(g, **kw)
    return lex2_directed(g, **kw)


def aplsp(g: Graph, **kw) -> Lex2Result:
    """Shortest paths by weight, ties broken by fewest edges."""
    return _dispatch(g.with_arrays(w2=np.ones(g.m, dtype=np.int64)), **kw)


def apslp(g: Graph, **kw) -> Lex2Result:
    """Fewest edges first, ties broken by total weight."""
    return _dispatch(g.with_arrays(w=np.ones(g.m, dtype=np.int64), w2=g.w.copy()), **kw)
