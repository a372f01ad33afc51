"""Exact APSP: Seidel, the staged bridging-set algorithm, the two-phase undirected
small-weight algorithm, budgeted red-edge APSP by layering, and the Seidel
variant for at most one red edge."""
from __future__ import annotations

import math

import numpy as np
from scipy.sparse.csgraph import dijkstra as _sp_dijkstra

from .certify import bellman_certificate
from .graph import RED, Graph, RetrySample, level_schedule, resampling, sample_hitting_sets
from .oracles import _csr, _to_int, dijkstra_from, floyd_warshall, potentials
from .products import minplus, minplus_shifted
from .semiring import DEFAULT_COST, INF, CostModel, InvalidArgument, NoPath, ToolkitError, ValidationError


class RecursionGuard(ToolkitError):
    pass


def brute_apsp(g: Graph) -> np.ndarray:
    """Floyd-Warshall; the cubic baseline."""
    return floyd_warshall(g)


# ------------------------------------------------------------------- Seidel

def _bool_square(a: np.ndarray) -> np.ndarray:
    af = a.astype(np.float32)
    a2 = a | ((af @ af) > 0)
    np.fill_diagonal(a2, False)
    return a2


def _seidel(a: np.ndarray, depth: int, guard: int) -> np.ndarray:
    a2 = _bool_square(a)
    if np.array_equal(a2, a):
        d = np.where(a, 1, INF).astype(np.int64)
        np.fill_diagonal(d, 0)
        return d
    if depth >= guard:
        raise RecursionGuard(
            f"Seidel recursion exceeded depth {guard}: n={a.shape[0]}, "
            f"edges={int(a.sum())}, squared edges={int(a2.sum())}")
    d2 = _seidel(a2, depth + 1, guard)
    return _parity_unfold(a, d2)


def _parity_unfold(a: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """D from the squared graph's distances with one product: D is odd iff the
    neighbours x of v have sum d2(u,x) < deg(v) * d2(u,v)."""
    fin = d2 != INF
    r2 = np.where(fin, d2, 0)
    n = a.shape[0]
    # sums stay below n^2, exact in float32 up to n = 4096
    dt = np.float32 if n <= 4096 else np.float64
    s = r2.astype(dt) @ a.astype(dt)
    deg = a.sum(axis=0)
    odd = fin & (s < r2 * deg[None, :])
    d = np.where(fin, 2 * r2 - odd, INF)
    np.fill_diagonal(d, 0)
    return d.astype(np.int64)


def _seidel_unfold(a: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """D from the distances of the squared graph: odd iff v has a neighbor x with
    d2(u,x) = d2(u,v) - 1, tested per residue class mod 3."""
    fin = d2 != INF
    af = a.astype(np.float64)
    d = np.where(fin, 2 * np.where(fin, d2, 0), INF)
    need = np.where(fin, (np.where(fin, d2, 0) - 1) % 3, -1)
    odd = np.zeros(a.shape, dtype=bool)
    for j in range(3):
        bj = (fin & (np.where(fin, d2, 0) % 3 == j)).astype(np.float64)
        cj = bj @ af
        odd |= (need == j) & (cj > 0)
    d = np.where(odd, d - 1, d)
    np.fill_diagonal(d, 0)
    return d.astype(np.int64)


def seidel_apsp(g: Graph) -> np.ndarray:
    g.require_undirected("seidel_apsp")
    g.require_unweighted("seidel_apsp")
    if g.n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    guard = math.ceil(math.log2(max(g.n, 2))) + 4
    return _seidel(g.adjacency(), 0, guard)


# ------------------------------------------------------ staged bridging sets

def _dijkstra_pred(g: Graph, sources, weights, reverse=False):
    sources = np.asarray(sources, dtype=np.int64)
    d, p = _sp_dijkstra(_csr(g, weights, reverse), directed=g.directed, indices=sources,
                        return_predecessors=True)
    return _to_int(np.atleast_2d(d)), np.atleast_2d(p)


def _first_hops_from(pred_row: np.ndarray, src: int) -> np.ndarray:
    """First vertex after ``src`` on the tree path to each vertex."""
    n = len(pred_row)
    first = np.full(n, -1, dtype=np.int64)
    first[src] = src
    for v in range(n):
        if first[v] != -1 or pred_row[v] < 0:
            continue
        chain = [v]
        x = pred_row[v]
        while x != src and first[x] == -1:
            chain.append(x)
            x = pred_row[x]
        f = chain[-1] if x == src else first[x]
        for y in chain:
            first[y] = f
    return first


def zwick_apsp(g: Graph, cost: CostModel = DEFAULT_COST, engine=None, seed: int = 0,
               c: float = 4.0, retries: int = 16, return_successors: bool = False,
               telemetry: dict | None = None):
    """Exact APSP for integer weights in [-c0, c0] by stages at hop scale (3/2)^k.

    Stage k multiplies D(V, R) by D(R, V) with entries capped at M*(3/2)^k,
    where R hits all long enough shortest paths.  Once the scale reaches the
    crossover, Dijkstra runs to and from the last sample and one brute-force
    bridging product finishes the job.  Negative weights are reweighted with
    Bellman-Ford potentials first.  The result is certified and the sample is
    redrawn if the certificate fails.
    """
    n = g.n
    if n == 0:
        z = np.zeros((0, 0), dtype=np.int64)
        return (z, z) if return_successors else z
    s_arr, t_arr, w_arr, _, _ = g.arcs()
    h = np.zeros(n, dtype=np.int64)
    if len(w_arr) and w_arr.min() < 0:
        h = potentials(g)
    rw = w_arr + h[s_arr] - h[t_arr]
    gr = Graph.__new__(Graph)
    gr.n, gr.directed = n, True
    gr.u, gr.v, gr.w = s_arr, t_arr, rw
    gr.w2 = gr.color = gr.vweights = None
    wmat = gr.weight_matrix()
    big_m = max(1, int(rw.max()) if len(rw) else 1)
    cross = cost.crossover_for(n)
    scales = []
    s = 1.5
    while s < cross and s < n:
        scales.append(s)
        s *= 1.5
    last = scales[-1] if scales else 1.0

    def attempt(sd):
        d = wmat.copy()
        succ = np.where(d != INF, np.arange(n)[None, :], -1)
        np.fill_diagonal(succ, np.arange(n))
        levels = sample_hitting_sets(n, scales + [last], sd, c)
        for s in scales:
            r = levels[s].vertices
            if r.size == 0:
                continue
            cap = int(math.ceil(big_m * s))
            left = d[:, r]
            right = d[r, :]
            left = np.where(left > cap, INF, left)
            right = np.where(right > cap, INF, right)
            p, wit = minplus(left, right, engine, cost)
            better = p < d
            if better.any():
                ii, jj = np.nonzero(better)
                mid = r[wit[ii, jj]]
                d[ii, jj] = p[ii, jj]
                succ[ii, jj] = succ[ii, mid]
        r = levels[last].vertices
        if r.size:
            fwd, fpred = _dijkstra_pred(gr, r, rw)
            bwd, bpred = _dijkstra_pred(gr, r, rw, reverse=True)
            for idx, x in enumerate(r.tolist()):
                first = _first_hops_from(fpred[idx], x)
                better = fwd[idx] < d[x]
                d[x, better] = fwd[idx][better]
                succ[x, better] = first[better]
                col = bwd[idx]
                better = col < d[:, x]
                d[better, x] = col[better]
                nxt = bpred[idx]
                succ[better, x] = np.where(nxt[better] >= 0, nxt[better], x)
            p, wit = minplus(d[:, r], d[r, :], "brute", cost)
            better = p < d
            if better.any():
                ii, jj = np.nonzero(better)
                mid = r[wit[ii, jj]]
                d[ii, jj] = p[ii, jj]
                hop = succ[ii, mid]
                succ[ii, jj] = np.where(mid == ii, succ[mid, jj], hop)
        if not bellman_certificate(gr, d):
            raise RetrySample("distance certificate failed")
        return d, succ

    d, succ = resampling(attempt, seed, retries, telemetry)
    fin = d != INF
    out = np.full_like(d, INF)
    out[fin] = (d - h[:, None] + h[None, :])[fin]
    np.fill_diagonal(succ, np.arange(n))
    succ = np.where(fin, succ, -1)
    return (out, succ) if return_successors else out


def reconstruct_path(succ: np.ndarray, u: int, v: int) -> list[int]:
    if succ[u, v] < 0:
        raise NoPath(f"no path from {u} to {v}")
    path = [u]
    x = u
    n = succ.shape[0]
    while x != v:
        x = int(succ[x, v])
        path.append(x)
        if len(path) > n + 1 or x < 0:
            raise ToolkitError("successor matrix is inconsistent")
    return path


# ------------------------------------------------- undirected small weights

def undirected_small_weight_apsp(g: Graph, c0: int | None = None, seed: int = 0, c: float = 4.0,
                                 retries: int = 16, engine=None, telemetry: dict | None = None,
                                 levels=None) -> np.ndarray:
    """Exact APSP for undirected graphs with weights in [0, c0].

    Phase 1 climbs the levels computing D(R_l, V) for pairs whose path has at
    most l edges (entries above c0*l are dropped).  Phase 2 descends and
    recovers every row of R_l' from D(R_l', R_l) * D(R_l, V), a product whose
    right factor varies by at most the left entries between rows, so the
    shifted mod-6l product applies.
    """
    g.require_undirected("undirected_small_weight_apsp")
    n = g.n
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if g.m and g.w.min() < 0:
        raise ValidationError("weights must be non-negative")
    if c0 is None:
        c0 = max(1, int(g.w.max()) if g.m else 1)
    elif g.m and g.w.max() > c0:
        raise ValidationError(f"edge weight exceeds c0={c0}")
    wmat = g.weight_matrix()
    lv = levels if levels is not None else level_schedule(max(n - 1, 1))

    def attempt(sd):
        samples = sample_hitting_sets(n, lv, sd, c)
        samples[lv[0]].vertices = np.arange(n)
        d = np.where(wmat > c0 * lv[0], INF, wmat)
        # phase 1: rows of R_l, hop length <= l
        for k in range(1, len(lv)):
            ell, prev = lv[k], lv[k - 1]
            r, rp = samples[ell].vertices, samples[prev].vertices
            if r.size == 0:
                continue
            p = minplus(d[np.ix_(r, rp)], d[rp, :], engine, with_witness=False)
            rows = np.minimum(d[r, :], p)
            d[r, :] = np.where(rows > c0 * ell, INF, rows)
        # phase 2: exact rows, top level down
        e = d.copy()
        for k in range(len(lv) - 1, 0, -1):
            ell, prev = lv[k], lv[k - 1]
            r, rp = samples[ell].vertices, samples[prev].vertices
            if r.size == 0:
                continue
            bound = c0 * ell
            a = d[np.ix_(rp, r)]
            a = np.where(a > bound, INF, a)
            p = minplus_shifted(a, e[r, :], max(1, bound), engine=engine)
            e[rp, :] = np.minimum(d[rp, :], p)
        if not bellman_certificate(g, e):
            raise RetrySample("distance certificate failed")
        return e

    return resampling(attempt, seed, retries, telemetry)


# --------------------------------------------------------- red-edge budgets

def cred_apsp(g: Graph, c: int, solver: str = "dijkstra") -> np.ndarray:
    """Distances over paths with at most ``c`` red edges via a (c+1)-layer digraph:
    blue arcs stay inside a layer, red arcs climb one layer."""
    if c < 0:
        raise InvalidArgument("budget must be >= 0")
    if g.color is None or np.any(g.color < 0):
        raise ValidationError("every edge needs a color")
    n = g.n
    s, t, w, _, col = g.arcs()
    us, vs, ws = [], [], []
    for layer in range(c + 1):
        blue = col != RED
        us.append(s[blue] + layer * n)
        vs.append(t[blue] + layer * n)
        ws.append(w[blue])
        if layer < c:
            red = col == RED
            us.append(s[red] + layer * n)
            vs.append(t[red] + (layer + 1) * n)
            ws.append(w[red])
    lg = Graph.__new__(Graph)
    lg.n, lg.directed = n * (c + 1), True
    lg.u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    lg.v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)
    lg.w = np.concatenate(ws) if ws else np.zeros(0, dtype=np.int64)
    lg.w2 = lg.color = lg.vweights = None
    if solver == "zwick":
        full = zwick_apsp(lg)
        rows = full[:n, :]
    else:
        rows = dijkstra_from(lg, np.arange(n)) if lg.m else np.where(
            np.eye(n, lg.n, dtype=bool), 0, INF).astype(np.int64)
    return rows.reshape(n, c + 1, n).min(axis=1)


def _redblue_square(red, blue):
    rf, bf = red.astype(np.float64), blue.astype(np.float64)
    r2 = red | ((rf @ bf) > 0) | ((bf @ rf) > 0)
    b2 = blue | ((bf @ bf) > 0)
    np.fill_diagonal(r2, False)
    np.fill_diagonal(b2, False)
    return r2, b2


def _one_red(red, blue, depth, guard, keep=None):
    r2, b2 = _redblue_square(red, blue)
    if np.array_equal(r2, red) and np.array_equal(b2, blue):
        d = np.where(red | blue, 1, INF).astype(np.int64)
        np.fill_diagonal(d, 0)
        return d
    if depth >= guard:
        raise RecursionGuard(f"1-red recursion exceeded depth {guard}")
    d2 = _one_red(r2, b2, depth + 1, guard)
    dbar = _dbar(blue, d2)
    d = np.minimum(dbar, dbar.T)
    d[red | blue] = 1
    np.fill_diagonal(d, 0)
    if keep is not None:
        keep["dbar"] = dbar
    return d


def _dbar(blue: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """2*D2 - 1 if u has a blue neighbor x with D2[u,v] = D2[x,v] + 1 (mod 3), else 2*D2."""
    fin = d2 != INF
    bf = blue.astype(np.float64)
    need = np.where(fin, (np.where(fin, d2, 0) - 1) % 3, -1)
    hit = np.zeros(d2.shape, dtype=bool)
    for j in range(3):
        mj = (fin & (np.where(fin, d2, 0) % 3 == j)).astype(np.float64)
        hit |= (need == j) & ((bf @ mj) > 0)
    dbar = np.where(fin, 2 * np.where(fin, d2, 0) - hit, INF)
    return dbar.astype(np.int64)


def one_red_apsp(g: Graph, return_intermediate: bool = False):
    """Distances over paths with at most one red edge (undirected, unweighted),
    by recursion on the squared pair (R or RB or BR, B or BB)."""
    g.require_undirected("one_red_apsp")
    g.require_unweighted("one_red_apsp")
    red, blue = g.colored_adjacency()
    guard = math.ceil(math.log2(max(g.n, 2))) + 4
    keep = {}
    d = _one_red(red, blue, 0, guard, keep)
    if return_intermediate:
        return d, keep.get("dbar")
    return d
