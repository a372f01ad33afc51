"""Timing harness: median wall time per size and a log-log slope fit."""
from __future__ import annotations

import math
import statistics
import time

import numpy as np

from .semiring import DEFAULT_COST, CostModel, InvalidArgument


def _minplus_case(engine):
    def setup(n, rng):
        a = rng.integers(0, 100, (n, n)).astype(np.int64)
        b = rng.integers(0, 100, (n, n)).astype(np.int64)
        return a, b

    def run(args):
        from .products import minplus
        minplus(args[0], args[1], engine, with_witness=False)

    return setup, run


def _graph_case(make, solve):
    def setup(n, rng):
        return make(n, int(rng.integers(0, 2**31)))

    return setup, solve


def _suites():
    from . import counting, exact, generators, oracles
    und = generators.random_undirected
    dig = generators.random_digraph
    return {
        "minplus-brute": _minplus_case("brute"),
        "minplus-blocked": _minplus_case("blocked"),
        "minplus-scaled": _minplus_case("scaled"),
        "seidel": _graph_case(lambda n, s: und(n, s, avg_degree=4), exact.seidel_apsp),
        "brute-apsp": _graph_case(lambda n, s: und(n, s, avg_degree=4), exact.brute_apsp),
        "bfs-apsp": _graph_case(lambda n, s: und(n, s, avg_degree=4), oracles.bfs_apsp),
        "zwick": _graph_case(lambda n, s: dig(n, s, weights=(1, 3)), exact.zwick_apsp),
        "count-exact": _graph_case(lambda n, s: dig(n, s), counting.count_exact),
    }


SUITES = ("minplus-brute", "minplus-blocked", "minplus-scaled", "seidel", "brute-apsp", "bfs-apsp",
          "zwick", "count-exact")


def fit_slope(sizes, times) -> tuple[float, float]:
    """Least-squares fit of log t = slope * log n + intercept."""
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.maximum(np.asarray(times, dtype=np.float64), 1e-9))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def bench(suite: str, sizes, repetitions: int = 3, seed: int = 0, cost: CostModel | None = None) -> dict:
    """Median time per size for ``suite`` and the fitted exponent.  The slope is
    stored in ``cost.notes`` (and ``cost.reported_exponent``)."""
    if suite not in SUITES:
        raise InvalidArgument(f"unknown suite {suite!r}; known: {', '.join(SUITES)}")
    sizes = [int(s) for s in sizes]
    if len(sizes) < 3:
        raise InvalidArgument("a slope fit needs at least three sizes")
    if repetitions < 1:
        raise InvalidArgument("repetitions must be >= 1")
    setup, run = _suites()[suite]
    rng = np.random.default_rng(seed)
    run(setup(min(sizes), rng))     # warm-up (JIT compilation)
    medians, raw = [], {}
    for n in sizes:
        ts = []
        for _ in range(repetitions):
            args = setup(n, rng)
            t0 = time.perf_counter()
            run(args)
            ts.append(time.perf_counter() - t0)
        raw[n] = ts
        medians.append(statistics.median(ts))
    slope, intercept = fit_slope(sizes, medians)
    cost = DEFAULT_COST if cost is None else cost
    cost.reported_exponent = slope
    cost.notes[f"slope:{suite}"] = slope
    return {
        "suite": suite,
        "sizes": sizes,
        "repetitions": repetitions,
        "seed": seed,
        "median_seconds": medians,
        "samples": {str(k): v for k, v in raw.items()},
        "slope": slope,
        "intercept": intercept,
        "finite": all(math.isfinite(t) for t in medians),
    }
