"""Extended distances, dense matrices and the small value types shared by every product.

Matrices are plain 2-D numpy arrays.  Distance matrices use ``int64`` with the
largest representable value reserved as infinity.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

INF = int(np.iinfo(np.int64).max)
NO_WITNESS = -1


class ToolkitError(Exception):
    """Base class for all errors raised by the toolkit."""


class InvalidArgument(ToolkitError, ValueError):
    pass


class BoundViolation(ToolkitError, ValueError):
    pass


class PreconditionViolation(ToolkitError, ValueError):
    pass


class ValidationError(ToolkitError, ValueError):
    pass


class ParseError(ToolkitError, ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class NegativeCycle(ToolkitError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"negative cycle through vertices {self.cycle}")


class SamplingFailure(ToolkitError):
    """A randomized step failed verification after every allowed retry."""


class ProbabilisticFailure(ToolkitError):
    """A randomized reduction did not reach its confidence target."""


class NoPath(ToolkitError):
    pass


def is_inf(x) -> bool:
    return x == INF


def ext_add(a: int, b: int) -> int:
    """Saturating addition on extended distances."""
    if a == INF or b == INF:
        return INF
    s = a + b
    if s >= INF:
        raise OverflowError("finite distance sum exceeds the storage range")
    return s


def sat_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise saturating addition of int64 distance arrays (broadcasting)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inf = (a == INF) | (b == INF)
    with np.errstate(over="ignore"):
        s = np.where(inf, 0, a) + np.where(inf, 0, b)
    return np.where(inf, INF, s)


def matrix_new(rows: int, cols: int, fill=INF, dtype=np.int64) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise InvalidArgument(f"matrix dimensions must be positive, got {rows}x{cols}")
    return np.full((rows, cols), fill, dtype=dtype)


def identity(n: int) -> np.ndarray:
    """Min-plus identity: zero diagonal, INF elsewhere."""
    m = matrix_new(n, n, INF)
    np.fill_diagonal(m, 0)
    return m


def as_dist(m) -> np.ndarray:
    """Coerce nested lists (with None / math.inf / INF for infinity) to an int64 matrix."""
    if isinstance(m, np.ndarray) and m.dtype == np.int64:
        if m.ndim != 2:
            raise InvalidArgument("expected a 2-D matrix")
        return m
    rows = []
    for row in m:
        out = []
        for x in row:
            if x is None or x == INF or (isinstance(x, float) and math.isinf(x)):
                out.append(INF)
            else:
                out.append(int(x))
        rows.append(out)
    arr = np.array(rows, dtype=np.int64)
    if arr.ndim != 2:
        raise InvalidArgument("expected a 2-D matrix")
    return arr


def finite_max(m: np.ndarray) -> int:
    fin = m[m != INF]
    return int(fin.max()) if fin.size else 0


def finite_min(m: np.ndarray) -> int:
    fin = m[m != INF]
    return int(fin.min()) if fin.size else 0


@dataclass(frozen=True)
class EntryBounds:
    """Declared bounds on the finite entries of a product's operands."""

    max_finite_a: int | None = None
    max_finite_b: int | None = None
    finite_count_a: int | None = None
    finite_count_b: int | None = None

    @classmethod
    def of(cls, a: np.ndarray, b: np.ndarray | None = None) -> "EntryBounds":
        return cls(
            max_finite_a=finite_max(a),
            max_finite_b=None if b is None else finite_max(b),
            finite_count_a=int((a != INF).sum()),
            finite_count_b=None if b is None else int((b != INF).sum()),
        )


def check_bounds(m: np.ndarray, max_finite: int | None = None, finite_count: int | None = None,
                 min_finite: int = 0) -> bool:
    m = as_dist(m)
    fin = m[m != INF]
    if fin.size and (fin.min() < min_finite):
        return False
    if max_finite is not None and fin.size and fin.max() > max_finite:
        return False
    if finite_count is not None and fin.size > finite_count:
        return False
    return True


def require_bounds(m: np.ndarray, max_finite: int | None, name: str = "matrix") -> None:
    if not check_bounds(m, max_finite):
        raise BoundViolation(f"{name} has finite entries outside [0, {max_finite}]")


@dataclass
class CostModel:
    """Tuning knobs and measured constants.

    ``omega`` and ``rho`` are kept for reporting only; algorithms consult
    ``crossover_L`` and the per-operation cost estimates used by the auto engine.
    """

    crossover_L: float | None = None
    reported_exponent: float | None = None
    brute_ns_per_op: float = 1.2
    blas_ns_per_flop: float = 0.05
    product_overhead_ns: float = 30_000.0
    omega: float = 3.0
    rho: float = 0.5
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.crossover_L is not None and self.crossover_L < 1:
            raise InvalidArgument("crossover_L must be >= 1")

    def crossover_for(self, n: int) -> float:
        if self.crossover_L is not None:
            return float(self.crossover_L)
        # default: sqrt(n) rounded up to the next (3/2)^k stage boundary
        target = max(1.0, math.sqrt(n))
        s = 1.0
        while s < target:
            s *= 1.5
        return s

    def calibrate(self, n: int = 96, seed: int = 0) -> "CostModel":
        """Micro-benchmark the brute kernel and the float BLAS product once."""
        from . import products

        rng = np.random.default_rng(seed)
        a = rng.integers(0, 50, size=(n, n)).astype(np.int64)
        products.minplus(a, a, "brute")  # compile
        t0 = time.perf_counter()
        products.minplus(a, a, "brute")
        self.brute_ns_per_op = (time.perf_counter() - t0) * 1e9 / n**3
        f = a.astype(np.float64)
        t0 = time.perf_counter()
        for _ in range(5):
            f @ f
        self.blas_ns_per_flop = (time.perf_counter() - t0) * 1e9 / (5 * n**3)
        self.notes["calibrated_n"] = n
        return self


DEFAULT_COST = CostModel()


# ---------------------------------------------------------------- text format

def _tok(t: str, line: int):
    if t == "INF":
        return INF
    try:
        v = int(t)
    except ValueError:
        raise ParseError(f"bad matrix entry {t!r}", line) from None
    return v


def parse_matrix(text: str) -> np.ndarray:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty matrix file")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != "matrix":
        raise ParseError("expected header 'matrix <rows> <cols>'", lineno)
    try:
        rows, cols = int(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError("bad dimensions", lineno) from None
    if rows < 1 or cols < 1:
        raise ParseError("dimensions must be positive", lineno)
    body = lines[1:]
    if len(body) != rows:
        raise ParseError(f"expected {rows} rows, found {len(body)}", lineno)
    m = np.empty((rows, cols), dtype=np.int64)
    for r, (ln_no, ln) in enumerate(body):
        toks = ln.split()
        if len(toks) != cols:
            raise ParseError(f"expected {cols} entries, found {len(toks)}", ln_no)
        for c, t in enumerate(toks):
            m[r, c] = _tok(t, ln_no)
    return m


def format_matrix(m) -> str:
    m = np.asarray(m)
    out = [f"matrix {m.shape[0]} {m.shape[1]}"]
    for row in m:
        out.append(" ".join("INF" if (m.dtype == np.int64 and x == INF) else str(x) for x in row.tolist()))
    return "\n".join(out) + "\n"


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return parse_matrix(fh.read())


def save_matrix(m, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_matrix(m))
