"""The eleven acceptance criteria, one test each.  Every test records a
PASS/FAIL line (shown in the pytest terminal summary and on stdout)."""
import math
import time
from fractions import Fraction

import numpy as np
from conftest import ACCEPTANCE_LINES, py_minplus, rand_dist
from tropapsp import counting, exact, generators, lex2, oracles, reductions as R
from tropapsp.approx import K_CONSTANT, ErrorProfile, approx_apsp
from tropapsp.bench import bench
from tropapsp.graph import Graph
from tropapsp.products import minplus
from tropapsp.semiring import INF, ProbabilisticFailure


class Criterion:
    def __init__(self, number, title, limit=None):
        self.number, self.title, self.limit = number, title, limit
        self.failures = []

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        if self.limit is not None and dt > self.limit:
            self.failures.append(f"runtime {dt:.1f}s over {self.limit}s")
        status = "PASS" if not self.failures else "FAIL"
        detail = "" if not self.failures else f" :: {len(self.failures)} problem(s), first: {self.failures[0]}"
        line = f"[{status}] criterion {self.number:2d} {self.title} ({dt:.1f}s){detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        if exc is None:
            assert not self.failures, line
        return False


def _no_negative_cycle(n, seed):
    """Random digraph with weights in [-2, 3] made free of negative cycles by potentials."""
    rng = np.random.default_rng(seed)
    g = generators.random_digraph(n, seed, weights=(0, 3))
    pot = rng.integers(0, 2, n)
    return g.with_arrays(w=g.w + pot[g.u] - pot[g.v])


def test_1_minplus_engines():
    rng = np.random.default_rng(1)
    with Criterion(1, "min-plus engine equivalence, 200 instances", 60) as c:
        for t in range(200):
            n1, n2, n3 = rng.integers(1, 65, 3)
            a = rand_dist(rng, (n1, n2), 100, rng.uniform(0, 0.5))
            b = rand_dist(rng, (n2, n3), 100, rng.uniform(0, 0.5))
            ref = minplus(a, b, "brute")[0]
            if t < 20:
                c.check((ref == py_minplus(a, b)).all(), f"brute vs loop oracle, instance {t}")
            for e in ("brute", "blocked", "scaled"):
                cc, w = minplus(a, b, e)
                c.check((cc == ref).all(), f"{e} differs on instance {t}")
                ii, jj = np.nonzero(cc != INF)
                k = w[ii, jj]
                c.check((k >= 0).all() and (a[ii, k] + b[k, jj] == cc[ii, jj]).all(),
                        f"{e} witness fails on instance {t}")


def test_2_exact_apsp():
    rng = np.random.default_rng(2)
    with Criterion(2, "exact APSP vs oracles, 50 graphs per algorithm", 180) as c:
        for t in range(50):
            n = int(rng.integers(2, 129))
            g = generators.random_undirected(n, t, avg_degree=rng.uniform(1, 6), connected=t % 3 != 0)
            c.check((exact.seidel_apsp(g) == oracles.bfs_apsp(g)).all(), f"seidel graph {t}")
        for t in range(50):
            n = int(rng.integers(2, 129))
            if t % 2:
                g = _no_negative_cycle(n, t)
                ref = oracles.bellman_ford_apsp(g)
            else:
                g = generators.random_digraph(n, t, weights=(0, int(rng.integers(1, 4))))
                ref = oracles.floyd_warshall(g)
            c.check((exact.zwick_apsp(g, seed=t) == ref).all(), f"zwick graph {t}")
        for t in range(50):
            n = int(rng.integers(2, 129))
            g = generators.random_undirected(n, t, weights=(0, int(rng.integers(1, 6))), connected=t % 4 != 0)
            c.check((exact.undirected_small_weight_apsp(g, seed=t) == oracles.oracle_apsp(g)).all(),
                    f"small-weight graph {t}")


def _hand_gadget_checks(c):
    one = R.MinPlusInstance(np.array([[1]]), np.array([[1]]), 1)
    gg = R.encode_minplus_as_uapsp(one)
    c.check(oracles.bfs_apsp(gg.graph)[gg.I[0], gg.J[0]] == 4, "uapsp hand distance 4")
    for t in range(20):
        x = R.MinPlusInstance(*generators.minplus_instance(3, 3, 3, 5, t), 5)
        gg = R.encode_minplus_as_uapsp(x)
        d = oracles.bfs_apsp(gg.graph)
        want = 2 + py_minplus(x.A, x.B)
        c.check((d[np.ix_(gg.I, gg.J)] == want).all(), f"distance = 2 + min_p on hand instance {t}")
    two = R.MinPlusInstance(np.array([[1, 2]]), np.array([[2], [1]]), 2)
    gg = R.encode_minplus_as_uapsp(two)
    c.check(gg.decode(oracles.bfs_apsp(gg.graph))[0, 0] == 3, "uapsp 1x2x1 decodes 3")


def test_3_gadget_round_trips():
    rng = np.random.default_rng(3)
    kinds = ["uapsp", "dag_aplp", "2red", "aplsp01", "vertex_weighted", "additive_lb", "minwitness"]
    with Criterion(3, "gadget round-trips, 100 instances per gadget", 120) as c:
        _hand_gadget_checks(c)
        for kind in kinds:
            for t in range(100):
                n1, n2, n3 = int(rng.integers(1, 9)), int(rng.integers(1, 5)), int(rng.integers(1, 9))
                M = int(rng.integers(1, 9))
                a, b = generators.minplus_instance(n1, n2, n3, M, 1000 * t + len(kind))
                if t % 3 == 0:
                    a[rng.random(a.shape) < 0.25] = INF
                x = R.MinPlusInstance(a, b, M)
                ref = py_minplus(a, b)
                if kind == "minwitness":
                    a2, b2, dec = R.encode_minplus_as_minwitness_eq(x)
                    got = dec(R.brute_minwitness_eq(a2, b2))
                elif kind == "additive_lb":
                    gg = R.encode_minplus_additive_lb(x, ErrorProfile.power(0), 12 * M)
                    got = R.solve_gadget(gg)
                else:
                    gg = R.ENCODERS[kind](x)
                    got = R.solve_gadget(gg)
                c.check((got == ref).all(), f"{kind} instance {t}")


def test_4_additive_approximation():
    rng = np.random.default_rng(4)
    with Criterion(4, "additive approximation bound, p in {0, .25, .5, 1}", 180) as c:
        c.check(K_CONSTANT <= 4, "documented K <= 4")
        for t in range(30):
            n = int(rng.integers(2, 129))
            g = generators.random_digraph(n, t, avg_degree=rng.uniform(1, 4))
            d = oracles.bfs_apsp(g)
            fin = d != INF
            for p in (0.0, 0.25, 0.5, 1.0):
                est, _ = approx_apsp(g, ErrorProfile.power(p), seed=t)
                c.check(((est == INF) == ~fin).all(), f"INF pattern graph {t} p={p}")
                dd, ee = d[fin], est[fin]
                bound = dd + K_CONSTANT * np.ceil(np.power(dd.astype(float), p))
                c.check((ee >= dd).all() and (ee <= bound).all(), f"bound graph {t} p={p}")
                if p == 0:
                    c.check((est == d).all(), f"p=0 not exact on graph {t}")


def test_5_additive_lb_decode():
    rng = np.random.default_rng(5)
    settings = [(0.0, 24, 2), (0.25, 70, 2), (0.5, 144, 1), (0.25, 40, 1)]
    with Criterion(5, "additive lower-bound gadget through the approximation, 50 instances", 300) as c:
        for t in range(50):
            p, ell, M = settings[t % len(settings)]
            n1, n2, n3 = int(rng.integers(1, 4)), int(rng.integers(1, 3)), int(rng.integers(1, 4))
            a, b = generators.minplus_instance(n1, n2, n3, M, t)
            x = R.MinPlusInstance(a, b, M)
            prof = ErrorProfile.power(p)
            gg = R.encode_minplus_additive_lb(x, prof, ell)
            step = math.ceil(6 * prof.f(ell))
            ref = py_minplus(a, b)
            exact_d = oracles.bfs_apsp(gg.graph)[np.ix_(gg.I, gg.J)]
            c.check((exact_d == ell + step * ref).all(), f"exact distance formula, instance {t}")
            est = approx_apsp(gg.graph, ErrorProfile.from_table(
                {1: prof.f(ell), **{y: y * prof.f(ell) / ell for y in range(ell, 2 * ell + 1)}}),
                seed=t, granularity_scale=0.5)[0][np.ix_(gg.I, gg.J)]
            c.check((np.abs(est - exact_d) <= 2 * prof.f(ell)).all(), f"estimate outside window, instance {t}")
            c.check((R.solve_gadget(gg) == ref).all(), f"decode, instance {t}")


def test_6_lex2():
    rng = np.random.default_rng(6)
    with Criterion(6, "Lex2 vs lexicographic Dijkstra, 50 graphs per algorithm", 180) as c:
        for t in range(50):
            n = int(rng.integers(2, 65))
            g = generators.dual_weight(n, t, avg_degree=rng.uniform(1, 5), w1=(0, 2), w2=(0, 3))
            r, ref = lex2.lex2_directed(g, seed=t), oracles.lex_dijkstra_apsp(g)
            c.check((r.d1 == ref[0]).all() and (r.d2 == ref[1]).all(), f"directed graph {t}")
        for t in range(50):
            n = int(rng.integers(2, 65))
            g = generators.dual_weight(n, t, avg_degree=rng.uniform(1, 12), w1=(1, 2), w2=(0, 3), directed=False)
            r, ref = lex2.lex2_undirected_positive(g), oracles.lex_dijkstra_apsp(g)
            c.check((r.d1 == ref[0]).all() and (r.d2 == ref[1]).all(), f"undirected graph {t}")
        for t in range(50):
            n = int(rng.integers(2, 65))
            g = generators.dual_weight(n, t, avg_degree=rng.uniform(1, 5), w1=(1, 2), w2=(0, 3))
            r, ref = lex2.lex2_gamma(g), oracles.lex_dijkstra_apsp(g)
            c.check((r.d1 == ref[0]).all() and (r.d2 == ref[1]).all(), f"gamma graph {t}")


def _rel_ok(approx, exact_c, U):
    for a, e in zip(approx.ravel().tolist(), exact_c.ravel().tolist()):
        if e == 0:
            if a != 0:
                return False
        elif abs(Fraction(a) - e) > Fraction(e, U):
            return False
    return True


def test_7_counting_tower():
    rng = np.random.default_rng(7)
    mods = (2, 97, 10**6 + 3)
    graphs = []
    for t in range(50):
        n = int(rng.integers(2, 97))
        if t % 2:
            graphs.append(("random", generators.random_digraph(n, t, avg_degree=rng.uniform(1, 5))))
        else:
            graphs.append(("random", generators.random_undirected(n, t, avg_degree=rng.uniform(1, 6),
                                                                  connected=t % 4 != 0)))
    for n in (60, 90, 120):
        graphs.append(("bigcount", generators.bigcount_layered(n, seed=n)))
    with Criterion(7, "counting tower: exact, capped, mod, approx", 300) as c:
        for t, (family, g) in enumerate(graphs):
            d, ref = oracles.oracle_count(g)
            if family == "bigcount":
                bits = max(int(x).bit_length() for x in ref.ravel())
                c.check(bits >= g.n / 6, f"bigcount n={g.n} has only {bits} bits")
            cm = counting.count_exact(g)
            c.check((cm.dist == d).all() and (cm.counts == ref).all(), f"exact graph {t}")
            for U in mods:
                if g.directed:
                    cap = counting.count_capped_directed(g, U, seed=t).counts
                    mod = counting.count_mod_directed(g, U).counts
                else:
                    cap = counting.count_undirected_seidel(g, "capped", U).counts
                    mod = counting.count_undirected_seidel(g, "mod", U).counts
                c.check((cap == np.minimum(ref, U)).all(), f"capped U={U} graph {t}")
                c.check((mod == ref % U).all(), f"mod U={U} graph {t}")
            for U in (10, 100):
                c.check(_rel_ok(counting.count_approx(g, U).counts, ref, U), f"approx U={U} graph {t}")


def test_8_betweenness():
    rng = np.random.default_rng(8)
    with Criterion(8, "exact rational betweenness", None) as c:
        star = Graph(4, [(0, 1), (0, 2), (0, 3)], directed=False)
        c.check(counting.betweenness(star, 0) == 6, "star center")
        for t in range(10):
            n = int(rng.integers(2, 40))
            tree = Graph(n, [(int(rng.integers(0, i)), i) for i in range(1, n)], directed=False)
            deg = np.bincount(np.concatenate([tree.u, tree.v]), minlength=n)
            bc = counting.betweenness_all(tree)
            c.check(all(bc[v] == 0 for v in np.nonzero(deg == 1)[0]), f"tree {t} leaves")
        for t in range(30):
            n = int(rng.integers(2, 65))
            make = generators.random_digraph if t % 2 else generators.random_undirected
            g = make(n, t, avg_degree=rng.uniform(1, 5))
            bc, ref = counting.betweenness_all(g), oracles.brandes_exact(g)
            c.check(all(isinstance(x, Fraction) for x in bc) and bc == ref, f"graph {t}")


def test_9_cred():
    rng = np.random.default_rng(9)
    with Criterion(9, "one-red / c-red coherence and monotonicity", None) as c:
        for t in range(50):
            n = int(rng.integers(2, 65))
            g = generators.colored(n, t, avg_degree=rng.uniform(1, 5), red_fraction=rng.uniform(0, 1))
            prev = None
            for budget in range(4):
                d = exact.cred_apsp(g, budget)
                c.check((d == oracles.budgeted_apsp(g, budget)).all(), f"graph {t} c={budget}")
                if prev is not None:
                    c.check((d <= prev).all(), f"monotonicity graph {t} c={budget}")
                prev = d
            c.check((exact.one_red_apsp(g) == exact.cred_apsp(g, 1)).all(), f"one-red graph {t}")


def test_10_unique_minplus():
    wins, reported, silent = 0, 0, 0
    with Criterion(10, "unique min-plus via counting, 100 trials", 120) as c:
        for t in range(100):
            a, b = generators.minplus_instance(8, 4, 8, 6, 10_000 + t)
            x = R.MinPlusInstance(a, b, 6)
            try:
                got = R.unique_minplus_via_counting(x, seed=t)
            except ProbabilisticFailure:
                reported += 1
                continue
            if (got == py_minplus(a, b)).all():
                wins += 1
            else:
                silent += 1
        c.check(wins >= 99, f"{wins}/100 successes ({reported} reported failures, {silent} wrong results)")


def test_11_performance():
    with Criterion(11, "performance sanity", None) as c:
        g = generators.random_digraph(256, 11, avg_degree=64)
        t0 = time.perf_counter()
        counting.count_exact(g)
        dt = time.perf_counter() - t0
        c.check(dt < 120, f"count_exact n=256 took {dt:.1f}s")
        rep = bench("minplus-brute", [64, 128, 256], repetitions=5, seed=11)
        c.check(2.7 <= rep["slope"] <= 3.3, f"brute slope {rep['slope']:.2f}")
        und = generators.random_undirected(256, 11, avg_degree=4)
        exact.seidel_apsp(und)
        exact.brute_apsp(und)
        ts, tb = [], []
        for _ in range(5):
            t0 = time.perf_counter()
            exact.seidel_apsp(und)
            ts.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            exact.brute_apsp(und)
            tb.append(time.perf_counter() - t0)
        c.check(np.median(ts) < np.median(tb), f"seidel {np.median(ts):.4f}s vs brute {np.median(tb):.4f}s")
        print(f"    count_exact n=256: {dt:.2f}s; brute slope {rep['slope']:.3f}; "
              f"seidel {np.median(ts) * 1e3:.1f}ms vs brute {np.median(tb) * 1e3:.1f}ms")
