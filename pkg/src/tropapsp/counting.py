"""Shortest-path counting: exact, capped, modular and approximate counts, and
betweenness centrality, all for unweighted graphs.

Counts are per ordered pair.  The diagonal has distance 0 and count 1;
unreachable pairs have distance INF and count 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .certify import count_certificate
from .graph import Graph, RetrySample, resampling, select_gamma
from .lex2 import greedy_dominating_set
from .products import approx_count_product_masked, funny_product
from .semiring import INF, InvalidArgument, ToolkitError

MODES = ("exact", "capped", "mod", "approx")


@dataclass
class CountMatrix:
    """Counts plus the companion distance matrix.  ``counts`` is an object array
    of Python ints (exact), int64 (capped, mod) or float64 (approx)."""

    mode: str
    dist: np.ndarray
    counts: np.ndarray
    U: int | None = None
    rel_error: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgument(f"unknown count mode {self.mode!r}")

    def as_objects(self) -> np.ndarray:
        return self.counts.astype(object)


# ------------------------------------------------------------- helpers

def _check(g: Graph, what: str) -> None:
    g.require_unweighted(what)


def _check_U(U) -> int:
    U = int(U)
    if U < 2:
        raise InvalidArgument("U must be >= 2")
    return U


def _distances(g: Graph) -> np.ndarray:
    from .oracles import dijkstra_from
    return dijkstra_from(g, np.arange(g.n))


def _multiplicity(g: Graph) -> np.ndarray:
    """Number of arcs per ordered pair (parallel edges count separately)."""
    s, t, _, _, _ = g.arcs()
    m = np.zeros((g.n, g.n), dtype=np.int64)
    np.add.at(m, (s, t), 1)
    np.fill_diagonal(m, 0)
    return m


class _Ring:
    """Integer arithmetic modulo U or saturating at U, on int64 matrices when
    the products fit and on Python ints otherwise."""

    def __init__(self, kind: str, U: int, n: int):
        self.kind, self.U = kind, U
        top = (U - 1 if kind == "mod" else U) ** 2 * max(n, 1)
        self.fast = "float" if top < 2**53 else ("int" if top < 2**62 else "object")

    def reduce(self, x):
        if self.kind == "mod":
            return x % self.U
        return np.minimum(x, self.U)

    def matmul(self, a, b):
        if self.fast == "float":
            r = np.rint(a.astype(np.float64) @ b.astype(np.float64)).astype(np.int64)
        elif self.fast == "int":
            r = a.astype(np.int64) @ b.astype(np.int64)
        else:
            r = a.astype(object) @ b.astype(object)
        return self.reduce(r)

    def add(self, a, b):
        return self.reduce(a.astype(object) + b.astype(object) if self.fast == "object" else a + b)


def _pick_split(sizes: np.ndarray, ell: int, prev: int) -> int:
    """Split index m in [max(1, ell - prev), prev], preferring [0.4 ell, 0.6 ell]
    and then the smallest layer."""
    lo, hi = max(1, ell - prev), prev
    if lo > hi:
        raise ToolkitError(f"no valid split index for level {ell}")
    pref = [m for m in range(lo, hi + 1) if 0.4 * ell <= m <= 0.6 * ell]
    cands = pref or list(range(lo, hi + 1))
    return min(cands, key=lambda m: (int(sizes[m]) if m < len(sizes) else 0, m))


def _levels(top: int) -> list[int]:
    out = [1]
    while out[-1] < top:
        out.append(max(out[-1] + 1, int(math.floor(1.5 * out[-1]))))
    return out


# ---------------------------------------------------------------- exact

def count_exact(g: Graph, telemetry: dict | None = None) -> CountMatrix:
    """Exact counts as Python ints.

    Pairs at distance <= 1 are read off the arcs.  Level l covers distances
    in (l', l] with l' the previous level: for each source s a layer
    V_m = {u : D[s,u] = m} with m near l/2 is chosen (the smallest one in
    [0.4 l, 0.6 l]) and C[s,v] = sum of C[s,u] * C[u,v] over u in V_m with
    D[u,v] = D[s,v] - m, since every shortest path crosses V_m exactly once.
    """
    _check(g, "count_exact")
    n = g.n
    d = _distances(g)
    fin = d != INF
    c = np.zeros((n, n), dtype=object)
    np.fill_diagonal(c, 1)
    mult = _multiplicity(g)
    one = d == 1
    c[one] = mult[one].astype(object)
    maxd = int(d[fin].max(initial=0))
    lv = _levels(maxd)
    for k in range(1, len(lv)):
        ell, prev = lv[k], lv[k - 1]
        for s in range(n):
            row = d[s]
            tgt = np.nonzero(fin[s] & (row > prev) & (row <= ell))[0]
            if tgt.size == 0:
                continue
            sizes = np.bincount(row[fin[s]], minlength=ell + 1)
            m = _pick_split(sizes, ell, prev)
            layer = np.nonzero(row == m)[0]
            sub = np.where(d[np.ix_(layer, tgt)] == (row[tgt] - m)[None, :], c[np.ix_(layer, tgt)], 0)
            c[s, tgt] = c[s, layer] @ sub
    if telemetry is not None:
        telemetry["levels"] = lv
    return CountMatrix("exact", d, c)


# ------------------------------------------------ capped, directed, sampled

def _capped_attempt(g, d, mult, U, seed, c, stats):
    n = g.n
    fin = d != INF
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    lg = math.log2(max(2, n * U))
    # a path of length l meets about c*lg sample vertices; allow twice that
    b = math.ceil(2 * c * lg)
    levels = [1]
    while levels[-1] < 2 * n:
        levels.append(levels[-1] * 2)

    def size(ell):
        if ell <= 1:
            return n
        if ell >= 2 * n:
            return 0
        return min(n, math.ceil(c * (n / ell) * lg))

    samples = {ell: order[:size(ell)] for ell in levels}
    base = np.zeros((n, n), dtype=np.int64)
    np.fill_diagonal(base, 1)
    base[d == 1] = np.minimum(mult[d == 1], U)
    # C[l'] counts shortest paths whose intermediate vertices avoid R_l'
    cnt = {ell: base.copy() for ell in levels}
    for ell in levels[1:]:
        band = fin & (d > ell // 2) & (d <= ell)
        if not band.any():
            continue
        # factors: pieces of length in [1, l/2] avoiding R_l inside
        known = fin & (d >= 1) & (d <= ell // 2)
        fd = np.where(known, d, INF)
        fc = np.where(known, cnt[ell], 0)
        top = int(d[band].max())
        rl = samples[ell]
        for lp in levels:
            if lp <= ell:
                continue        # a path this long meets R_l, hence R_lp, inside
            keep = np.ones(n, dtype=bool)
            keep[samples[lp]] = False
            T = np.sort(rl[keep[rl]])
            if T.size == 0:
                continue
            total = np.zeros((n, n), dtype=np.int64)
            pd, pc = fd[:, T], fc[:, T]
            right = (fd[T, :], fc[T, :])
            loop = (fd[np.ix_(T, T)], fc[np.ix_(T, T)])
            for j in range(b + 2):
                if j == b + 1:
                    # a shortest prefix meeting b + 1 sample vertices: the sample is too dense
                    if np.any((pd != INF) & (pd == d[:, T])):
                        raise RetrySample(f"a shortest path meets more than {b} sample vertices")
                    break
                qd, qc = funny_product((pd, pc), right, cap=U)
                hit = band & (qd == d)
                total[hit] = np.minimum(total[hit] + qc[hit], U)
                pd, pc = funny_product((pd, pc), loop, cap=U)
                alive = pd < top
                if not alive.any():
                    break
                pd = np.where(alive, pd, INF)
                pc = np.where(alive, pc, 0)
            cnt[lp][band] = total[band]
    stats["b"] = b
    stats["sample_sizes"] = {ell: int(len(v)) for ell, v in samples.items()}
    out = cnt[levels[-1]]
    if not count_certificate(g, d, out, lambda x: np.minimum(x, U)):
        raise RetrySample("count recurrence check failed")
    return out


def count_capped_directed(g: Graph, U: int, seed: int = 0, c: float = 4.0, retries: int = 16,
                          telemetry: dict | None = None) -> CountMatrix:
    """min(count, U) per pair from nested random samples R_1 = V > R_2 > R_4 > ...

    For each power-of-two level l the pairs at distance in (l/2, l] are split
    at the sample vertices they meet; the chain of paired (distance, count)
    products V x T, (T x T)^j, T x V with T = R_l - R_l' yields the counts for
    paths avoiding R_l' inside.  The result is checked against the counting
    recurrence and the sample is redrawn on failure.
    """
    _check(g, "count_capped_directed")
    U = _check_U(U)
    d = _distances(g)
    mult = _multiplicity(g)
    stats = {}
    tel = {} if telemetry is None else telemetry
    out = resampling(lambda sd: _capped_attempt(g, d, mult, U, sd, c, stats), seed, retries, tel)
    tel.update(stats)
    return CountMatrix("capped", d, out, U)


# -------------------------------------------------- undirected, squaring

def _seidel_count(mult, adj, ring, depth, guard):
    from .exact import RecursionGuard, _bool_square, _seidel_unfold
    n = adj.shape[0]
    adj2 = _bool_square(adj)
    if np.array_equal(adj2, adj):
        d = np.where(adj, 1, INF).astype(np.int64)
        np.fill_diagonal(d, 0)
        c = np.where(adj, mult, 0)
        np.fill_diagonal(c, 1)
        return d, c
    if depth >= guard:
        raise RecursionGuard(f"count recursion exceeded depth {guard} at n={n}")
    # squared graph with multiplicities A + A*A
    m2 = ring.add(mult, ring.matmul(mult, mult))
    np.fill_diagonal(m2, 0)
    m2 = np.where(adj2, m2, 0)
    d2, c2 = _seidel_count(m2, adj2, ring, depth + 1, guard)
    d = _seidel_unfold(adj, d2)
    fin = d2 != INF
    r2 = np.where(fin, d2, 0)
    c = np.where(fin & (d % 2 == 0), c2, 0)
    odd = fin & (d % 2 == 1)
    for j in range(3):
        dj = np.where(fin & (r2 % 3 == j), c2, 0)
        xj = ring.matmul(dj, mult)
        sel = odd & ((r2 - 1) % 3 == j)
        c[sel] = xj[sel]
    np.fill_diagonal(c, 1)
    return d, c


def count_undirected_seidel(g: Graph, mode: str, U: int) -> CountMatrix:
    """Counts modulo U (``mode="mod"``) or capped at U (``mode="capped"``) by
    the squaring recursion: G^2 carries multiplicities A + A*A, even distances
    keep the squared graph's counts and odd ones sum over the neighbours one
    step closer.  Saturating arithmetic is exact for the cap because every
    multiplier is a positive integer."""
    g.require_undirected("count_undirected_seidel")
    _check(g, "count_undirected_seidel")
    if mode not in ("mod", "capped"):
        raise InvalidArgument("mode must be 'mod' or 'capped'")
    U = _check_U(U)
    n = g.n
    if n == 0:
        z = np.zeros((0, 0), dtype=np.int64)
        return CountMatrix(mode, z, z.copy(), U)
    ring = _Ring(mode, U, n)
    mult = ring.reduce(_multiplicity(g))
    guard = math.ceil(math.log2(max(n, 2))) + 4
    d, c = _seidel_count(mult, g.adjacency(), ring, 0, guard)
    c = ring.reduce(c)
    c[d == INF] = 0
    return CountMatrix(mode, d, c, U)


# ---------------------------------------------- gamma-positioned slices

def _floor_mul(gamma: Fraction, x: int) -> int:
    return (gamma.numerator * x) // gamma.denominator


def _gamma_slices(d, arc, product, zero, one_diag, c: float, telemetry: dict | None):
    """Count slices CC_k (counts of pairs at distance k, zero elsewhere) for
    every k, built only through products at the positions floor(gamma*j*2^i) + b,
    |b| <= 4.  ``product(f, g, mask)`` returns f*g on ``mask``."""
    n = d.shape[0]
    fin = d != INF
    maxd = int(d[fin].max(initial=0))
    K = 4
    gs = select_gamma(d, n, c=c, window=K, c0=1)
    gamma = gs.gamma
    slices = {0: one_diag}
    for k in range(1, min(maxd, 3 * K + 4) + 1):
        want = d == k
        slices[k] = product(slices[k - 1], arc, want) if want.any() else zero

    def sl(k):
        if k < 0 or k > maxd:
            return zero
        if k not in slices:
            raise ToolkitError(f"slice {k} requested before it was built")
        return slices[k]

    top_i = 0
    while _floor_mul(gamma, 2**top_i) <= maxd + K:
        top_i += 1
    for i in range(1, top_i + 1):
        h = _floor_mul(gamma, 2 ** (i - 1))
        gi = _floor_mul(gamma, 2**i)
        for b in range(-K, K + 1):
            tgt = gi + b
            if tgt < 0 or tgt > maxd or tgt in slices:
                continue
            want = d == tgt
            a = h + b // 2
            slices[tgt] = product(sl(a), sl(tgt - a), want) if want.any() else zero
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
            # all odd multiples share the right factor: stack the left ones
            splits = [_floor_mul(gamma, (j - 1) * 2**i) + b // 2 for j in todo]
            rights = {x - a for x, a in zip(tg, splits)}
            for r in sorted(rights):
                idx = [q for q in range(len(todo)) if tg[q] - splits[q] == r]
                wants = [d == tg[q] for q in idx]
                mask = np.concatenate(wants, axis=0)
                if mask.any():
                    res = product(np.concatenate([sl(splits[q]) for q in idx], axis=0), sl(r), mask)
                else:
                    res = np.concatenate([zero] * len(idx), axis=0)
                for p, q in enumerate(idx):
                    slices[tg[q]] = res[p * n:(p + 1) * n]
    if telemetry is not None:
        telemetry.update({"gamma": gamma, "level_counts": gs.level_counts,
                          "level_bounds": gs.level_bounds})
    out = zero.copy()
    for k in range(maxd + 1):
        sel = d == k
        out[sel] = sl(k)[sel]
    return out


def count_mod_directed(g: Graph, U: int, c: float = 4.0, telemetry: dict | None = None) -> CountMatrix:
    """Counts modulo U through count slices at gamma-scaled distances, each
    slice an ordinary product over Z_U of two shorter slices."""
    _check(g, "count_mod_directed")
    U = _check_U(U)
    n = g.n
    d = _distances(g)
    ring = _Ring("mod", U, n)
    arc = ring.reduce(_multiplicity(g))
    zero = np.zeros((n, n), dtype=np.int64)
    one = np.eye(n, dtype=np.int64) % U

    def product(f, h, mask):
        return np.where(mask, ring.matmul(f, h), 0)

    out = _gamma_slices(d, arc, product, zero, one, c, telemetry)
    return CountMatrix("mod", d, out % U, U)


# ---------------------------------------------------------- approximate

def _approx_directed(g, d, Up, c, telemetry):
    n = g.n
    arc = _multiplicity(g).astype(np.float64)
    zero = np.zeros((n, n))

    def product(f, h, mask):
        return approx_count_product_masked(f, h, Up, mask)

    return _gamma_slices(d, arc, product, zero, np.eye(n), c, telemetry)


def _approx_undirected(g, d, Up, L, telemetry):
    """Undirected counts: high-degree vertices in groups around a dominating
    vertex, split through a band of layers around the group centre; low-degree
    vertices by a BFS count that uses only arcs into low-degree vertices and
    starts from the already known counts of high-degree vertices."""
    from scipy.sparse import csr_matrix
    n = g.n
    fin = d != INF
    maxd = int(d[fin].max(initial=0))
    mult = _multiplicity(g).astype(np.float64)
    adj = g.adjacency()
    if L is None:
        L = max(1, math.ceil(n ** 0.42))
    deg = adj.sum(axis=1)
    high = np.nonzero(deg > n / L)[0]
    low = np.nonzero(deg <= n / L)[0]
    gsize = max(1, math.ceil(n / L))
    groups = []
    if high.size:
        covered = np.zeros(n, dtype=bool)
        for x in greedy_dominating_set(adj, high):
            nb = np.nonzero((adj[x] | (np.arange(n) == x)) & ~covered)[0]
            nb = nb[np.isin(nb, high)]
            covered[nb] = True
            groups += [nb[s0:s0 + gsize] for s0 in range(0, nb.size, gsize)]
    cnt = np.zeros((n, n))
    np.fill_diagonal(cnt, 1.0)
    base = min(maxd, 4)
    prev_slice = np.eye(n)
    for k in range(1, base + 1):
        want = d == k
        prev_slice = np.where(want, approx_count_product_masked(prev_slice, mult, Up, want), 0.0)
        cnt[want] = prev_slice[want]
    into_low = csr_matrix(mult[:, low])
    prev = base
    levels = []
    while prev < maxd:
        ell = max(prev + 1, int(math.floor(1.5 * prev)))
        levels.append(ell)
        for S in groups:
            ds = d[S[0]]
            dsf = np.where(ds != INF, ds, -10**9)
            sub = d[S]
            tgt = (sub > prev) & (sub <= ell) & (sub != INF)
            if not tgt.any():
                continue
            sizes = np.array([int((np.abs(dsf - m) <= 2).sum()) for m in range(ell + 1)])
            m = _pick_split(sizes, ell, prev)
            Y = np.nonzero(np.abs(dsf - m) <= 2)[0]
            f = np.where(d[np.ix_(S, Y)] == m, cnt[np.ix_(S, Y)], 0.0)
            for r in range(prev + 1 - m, ell - m + 1):
                mask = tgt & (sub == m + r)
                if not mask.any():
                    continue
                h = np.where(d[Y] == r, cnt[Y], 0.0)
                res = approx_count_product_masked(f, h, Up, mask)
                rows, cols = np.nonzero(mask)
                cnt[S[rows], cols] = res[rows, cols]
        cnt[:, high] = cnt[high].T
        if low.size:
            # BFS layers prev+1..ell from every low source at once
            rows = cnt[low]
            dl = d[low]
            for k in range(prev + 1, ell + 1):
                src = np.where(dl == k - 1, rows, 0.0)
                step = np.asarray((into_low.T @ src.T).T)
                sel = dl[:, low] == k
                blk = rows[:, low]
                blk[sel] = step[sel]
                rows[:, low] = blk
            cnt[low] = rows
            cnt[:, low] = cnt[low].T
        prev = ell
    if telemetry is not None:
        telemetry.update({"high": int(high.size), "groups": len(groups), "levels": levels})
    return cnt


def count_approx(g: Graph, U: int, c: float = 4.0, L: int | None = None,
                 telemetry: dict | None = None) -> CountMatrix:
    """Counts within a factor 1 + 1/U, as floats.

    Products drop terms below a 1/U' fraction of the leading group with
    U' = 4 n U, so the error compounded over at most n products stays within
    1/U.  Directed graphs use gamma-positioned slices; undirected graphs the
    high/low degree split.
    """
    _check(g, "count_approx")
    U = _check_U(U)
    n = g.n
    d = _distances(g)
    Up = 4.0 * max(n, 1) * U
    if g.directed:
        cnt = _approx_directed(g, d, Up, c, telemetry)
    else:
        cnt = _approx_undirected(g, d, Up, L, telemetry)
    cnt[d == INF] = 0.0
    if not np.all(np.isfinite(cnt)):
        raise ToolkitError("counts overflow the floating range")
    return CountMatrix("approx", d, cnt, U, rel_error=1.0 / U)


# ----------------------------------------------------------- betweenness

def _bc_from(cm: CountMatrix, v: int):
    d, c = cm.dist, cm.counts
    n = d.shape[0]
    others = np.ones(n, dtype=bool)
    others[v] = False
    fin = (d != INF) & (d[:, [v]] != INF) & (d[[v], :] != INF)
    through = fin & (np.where(fin, d[:, [v]] + d[[v], :], -1) == d)
    through &= others[:, None] & others[None, :]
    np.fill_diagonal(through, False)
    ss, tt = np.nonzero(through)
    if cm.mode == "exact":
        total = Fraction(0)
        for s, t in zip(ss.tolist(), tt.tolist()):
            total += Fraction(c[s, v] * c[v, t], c[s, t])
        return total
    num = c[ss, v].astype(np.float64) * c[v, tt].astype(np.float64)
    return float(np.sum(num / c[ss, tt].astype(np.float64)))


def betweenness(g: Graph, v: int, mode: str = "exact", U: int = 100, counts: CountMatrix | None = None):
    """Sum over ordered pairs s != t, both != v, of C[s,v]*C[v,t]/C[s,t] where
    v lies on a shortest s-t path.  Exact mode returns a Fraction, approximate
    mode a float within a factor 1 + 1/U."""
    v = int(v)
    if not 0 <= v < g.n:
        raise InvalidArgument(f"vertex {v} out of range")
    if counts is None:
        counts = _counts_for_bc(g, mode, U)
    return _bc_from(counts, v)


def betweenness_all(g: Graph, mode: str = "exact", U: int = 100) -> list:
    cm = _counts_for_bc(g, mode, U)
    return [_bc_from(cm, v) for v in range(g.n)]


def _counts_for_bc(g, mode, U):
    if mode == "exact":
        return count_exact(g)
    if mode == "approx":
        # the per-term errors of numerator and denominator compound
        return count_approx(g, 3 * _check_U(U))
    raise InvalidArgument("betweenness mode must be 'exact' or 'approx'")
