import numpy as np
import pytest
from hypothesis import settings

from tropapsp.semiring import INF

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def py_minplus(a, b):
    """Plain triple loop, kept free of numpy tricks on purpose."""
    a = [[int(x) for x in row] for row in np.asarray(a).tolist()]
    b = [[int(x) for x in row] for row in np.asarray(b).tolist()]
    n1, n2, n3 = len(a), len(b), len(b[0])
    out = [[INF] * n3 for _ in range(n1)]
    for i in range(n1):
        for j in range(n3):
            best = INF
            for k in range(n2):
                if a[i][k] != INF and b[k][j] != INF:
                    best = min(best, a[i][k] + b[k][j])
            out[i][j] = best
    return np.array(out, dtype=np.int64)


def rand_dist(rng, shape, hi=100, inf_frac=0.2, lo=0):
    m = rng.integers(lo, hi + 1, shape).astype(np.int64)
    m[rng.random(shape) < inf_frac] = INF
    return m


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
