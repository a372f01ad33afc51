"""Graph container, text I/O, hitting-set sampling and the gamma selector."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .semiring import INF, InvalidArgument, ParseError, SamplingFailure, ValidationError

BLUE, RED = 0, 1
_COLOR_NAMES = {"blue": BLUE, "red": RED}


class Graph:
    """Directed or undirected graph with integer weights.

    Edges are kept as parallel arrays.  Undirected edges are stored once;
    :meth:`arcs` yields both orientations.  ``w2`` (secondary weights),
    ``color`` and ``vweights`` are optional.
    """

    def __init__(self, n: int, edges=(), directed: bool = True, *, w2=None, color=None,
                 vweights=None, allow_loops: bool = False, weight_range=None):
        if n < 0:
            raise InvalidArgument("vertex count must be non-negative")
        self.n = int(n)
        self.directed = bool(directed)
        edges = list(edges)
        us, vs, ws = [], [], []
        for e in edges:
            if len(e) == 2:
                u, v = e
                w = 1
            else:
                u, v, w = e[:3]
            us.append(int(u))
            vs.append(int(v))
            ws.append(int(w))
        self.u = np.array(us, dtype=np.int64)
        self.v = np.array(vs, dtype=np.int64)
        self.w = np.array(ws, dtype=np.int64)
        self.w2 = None if w2 is None else np.array(list(w2), dtype=np.int64)
        self.color = None
        if color is not None:
            cols = [(_COLOR_NAMES[c] if isinstance(c, str) else c) for c in color]
            self.color = np.array([-1 if c is None else int(c) for c in cols], dtype=np.int64)
        self.vweights = None if vweights is None else np.array(list(vweights), dtype=np.int64)
        self._validate(allow_loops, weight_range)

    def _validate(self, allow_loops, weight_range):
        m = len(self.u)
        if m and (self.u.min() < 0 or self.v.min() < 0 or self.u.max() >= self.n or self.v.max() >= self.n):
            raise ValidationError("edge endpoint out of range")
        if not allow_loops and m and np.any(self.u == self.v):
            raise ValidationError("self-loops are not allowed")
        for name, arr in (("w2", self.w2), ("color", self.color)):
            if arr is not None and len(arr) != m:
                raise ValidationError(f"{name} length differs from edge count")
        if self.vweights is not None and len(self.vweights) != self.n:
            raise ValidationError("vertex weight vector has wrong length")
        if weight_range is not None and m:
            lo, hi = weight_range
            if self.w.min() < lo or self.w.max() > hi:
                raise ValidationError(f"edge weight outside [{lo}, {hi}]")

    # ---------------------------------------------------------------- views
    @property
    def m(self) -> int:
        return len(self.u)

    def arcs(self):
        """Arrays (src, dst, w1, w2, color) with undirected edges doubled."""
        w2 = self.w2 if self.w2 is not None else np.ones(self.m, dtype=np.int64)
        col = self.color if self.color is not None else np.full(self.m, -1, dtype=np.int64)
        if self.directed:
            return self.u, self.v, self.w, w2, col
        return (np.concatenate([self.u, self.v]), np.concatenate([self.v, self.u]),
                np.concatenate([self.w, self.w]), np.concatenate([w2, w2]),
                np.concatenate([col, col]))

    def is_unweighted(self) -> bool:
        return bool(np.all(self.w == 1))

    def weight_matrix(self) -> np.ndarray:
        """Min-plus adjacency: 0 on the diagonal, lightest arc weight, INF elsewhere."""
        d = np.full((self.n, self.n), INF, dtype=np.int64)
        s, t, w, _, _ = self.arcs()
        if len(s):
            order = np.argsort(-w, kind="stable")   # lighter arcs written last
            d[s[order], t[order]] = w[order]
        np.fill_diagonal(d, np.minimum(np.diagonal(d), 0))
        return d

    def lex_weight_matrices(self):
        """Lexicographically lightest arc per ordered pair as (W1, W2)."""
        d1 = np.full((self.n, self.n), INF, dtype=np.int64)
        d2 = np.full((self.n, self.n), INF, dtype=np.int64)
        s, t, w, w2, _ = self.arcs()
        if len(s):
            order = np.lexsort((-w2, -w))
            d1[s[order], t[order]] = w[order]
            d2[s[order], t[order]] = w2[order]
        np.fill_diagonal(d1, 0)
        np.fill_diagonal(d2, 0)
        return d1, d2

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        s, t, _, _, _ = self.arcs()
        a[s, t] = True
        np.fill_diagonal(a, False)
        return a

    def colored_adjacency(self):
        if self.color is None or np.any(self.color < 0):
            raise ValidationError("every edge needs a color")
        s, t, _, _, col = self.arcs()
        red = np.zeros((self.n, self.n), dtype=bool)
        blue = np.zeros((self.n, self.n), dtype=bool)
        red[s[col == RED], t[col == RED]] = True
        blue[s[col == BLUE], t[col == BLUE]] = True
        np.fill_diagonal(red, False)
        np.fill_diagonal(blue, False)
        return red, blue

    def out_lists(self):
        """Per-vertex list of (neighbor, w1, w2, color) over arcs."""
        s, t, w, w2, col = self.arcs()
        adj = [[] for _ in range(self.n)]
        for a, b, x, y, c in zip(s.tolist(), t.tolist(), w.tolist(), w2.tolist(), col.tolist()):
            adj[a].append((b, x, y, c))
        return adj

    def reversed(self) -> "Graph":
        if not self.directed:
            return self
        return self.with_arrays(self.v, self.u)

    def with_arrays(self, u=None, v=None, w=None, w2="keep", color="keep") -> "Graph":
        g = Graph.__new__(Graph)
        g.n, g.directed = self.n, self.directed
        g.u = self.u if u is None else np.asarray(u, dtype=np.int64)
        g.v = self.v if v is None else np.asarray(v, dtype=np.int64)
        g.w = self.w if w is None else np.asarray(w, dtype=np.int64)
        g.w2 = self.w2 if isinstance(w2, str) else (None if w2 is None else np.asarray(w2, dtype=np.int64))
        g.color = self.color if isinstance(color, str) else color
        g.vweights = self.vweights
        return g

    def require_undirected(self, what: str) -> None:
        if self.directed:
            raise InvalidArgument(f"{what} needs an undirected graph")

    def require_unweighted(self, what: str) -> None:
        if not self.is_unweighted():
            raise InvalidArgument(f"{what} needs an unweighted graph")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph) or (self.n, self.directed) != (other.n, other.directed):
            return False
        return sorted(_edge_tuples(self)) == sorted(_edge_tuples(other)) and (
            (self.vweights is None and other.vweights is None)
            or (self.vweights is not None and other.vweights is not None
                and np.array_equal(self.vweights, other.vweights)))

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph({kind}, n={self.n}, m={self.m})"


def _edge_tuples(g: Graph):
    out = []
    for i in range(g.m):
        u, v = int(g.u[i]), int(g.v[i])
        if not g.directed and u > v:
            u, v = v, u
        out.append((u, v, int(g.w[i]),
                    None if g.w2 is None else int(g.w2[i]),
                    None if g.color is None else int(g.color[i])))
    return out


# ------------------------------------------------------------------- text I/O

def format_graph(g: Graph) -> str:
    kind = "directed" if g.directed else "undirected"
    flags = []
    if g.color is not None:
        flags.append("colors")
    if g.w2 is not None:
        flags.append("dual")
    if g.vweights is not None:
        flags.append("vweights")
    lines = [" ".join(["graph", kind, str(g.n), str(g.m)] + flags)]
    if g.vweights is not None:
        lines.append("vw " + " ".join(str(x) for x in g.vweights.tolist()))
    names = {BLUE: "blue", RED: "red"}
    for i in range(g.m):
        parts = [str(int(g.u[i])), str(int(g.v[i])), str(int(g.w[i]))]
        if g.w2 is not None:
            parts.append(str(int(g.w2[i])))
        if g.color is not None:
            parts.append(names[int(g.color[i])])
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_graph(text: str, weight_range=None) -> Graph:
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    rows = [(i, ln) for i, ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise ParseError("empty graph file")
    ln_no, header = rows[0]
    h = header.split()
    if len(h) < 4 or h[0] != "graph" or h[1] not in ("directed", "undirected"):
        raise ParseError("expected header 'graph <directed|undirected> <n> <m> [flags]'", ln_no)
    try:
        n, m = int(h[2]), int(h[3])
    except ValueError:
        raise ParseError("bad vertex or edge count", ln_no) from None
    flags = set(h[4:])
    bad = flags - {"colors", "dual", "vweights"}
    if bad:
        raise ParseError(f"unknown header flag(s) {sorted(bad)}", ln_no)
    body = rows[1:]
    vw = None
    if "vweights" in flags:
        if not body or not body[0][1].startswith("vw"):
            raise ParseError("missing 'vw' vertex weight line", body[0][0] if body else ln_no)
        vln, vtxt = body[0]
        toks = vtxt.split()[1:]
        if len(toks) != n:
            raise ParseError(f"expected {n} vertex weights", vln)
        try:
            vw = [int(x) for x in toks]
        except ValueError:
            raise ParseError("bad vertex weight", vln) from None
        body = body[1:]
    if len(body) != m:
        raise ParseError(f"expected {m} edge lines, found {len(body)}", ln_no)
    edges, w2s, cols = [], [], []
    want = 3 + ("dual" in flags) + ("colors" in flags)
    for eln, etxt in body:
        toks = etxt.split()
        if len(toks) != want:
            raise ParseError(f"expected {want} fields on edge line", eln)
        try:
            u, v, w = int(toks[0]), int(toks[1]), int(toks[2])
            pos = 3
            if "dual" in flags:
                w2s.append(int(toks[pos]))
                pos += 1
        except ValueError:
            raise ParseError("bad integer on edge line", eln) from None
        if "colors" in flags:
            c = toks[pos]
            if c not in _COLOR_NAMES:
                raise ParseError(f"unknown color {c!r}", eln)
            cols.append(_COLOR_NAMES[c])
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError("vertex id out of range", eln)
        edges.append((u, v, w))
    return Graph(n, edges, directed=h[1] == "directed",
                 w2=w2s if "dual" in flags else None,
                 color=cols if "colors" in flags else None,
                 vweights=vw, weight_range=weight_range)


def load_graph(path, weight_range=None) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read(), weight_range)


def save_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g))


# ---------------------------------------------------------------- levels

def level_schedule(top: int, ratio: float = 1.5) -> list[int]:
    """Integer levels 1 = l_0 < l_1 < ... with l_{k+1} = max(l_k + 1, floor(ratio*l_k)),
    ending with the first level >= top."""
    levels = [1]
    while levels[-1] < top:
        levels.append(max(levels[-1] + 1, int(math.floor(levels[-1] * ratio))))
    return levels


# ------------------------------------------------------------ hitting sets

@dataclass
class HittingSet:
    level: float
    vertices: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.vertices)


def hitting_set_size(n: int, level: float, c: float = 4.0) -> int:
    if level <= 1:
        return n
    if level >= 2 * n:
        return 0
    return min(n, int(math.ceil(c * (n / level) * math.log2(max(n, 2)))))


def sample_hitting_sets(n: int, levels, seed: int = 0, c: float = 4.0) -> dict:
    """Nested random vertex samples, one per level.

    A single random order of V is drawn and level ``l`` keeps a prefix of size
    ``min(n, ceil(c * n/l * log2 n))``; level 1 keeps everything and levels
    ``>= 2n`` keep nothing.  Prefixes of one order are automatically nested.
    """
    if isinstance(n, Graph):
        n = n.n
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    out = {}
    for lv in levels:
        k = hitting_set_size(n, lv, c)
        out[lv] = HittingSet(lv, np.sort(order[:k]), seed)
    return out


def hits_all(paths, members: np.ndarray, n: int, span: int) -> bool:
    """Hitting check: every window of ``span`` consecutive vertices on every path
    (of at least that many vertices) contains a member."""
    mark = np.zeros(n, dtype=bool)
    mark[members] = True
    for p in paths:
        if len(p) < span:
            continue
        hits = np.concatenate([[0], np.cumsum(mark[np.asarray(p)])])
        if np.any(hits[span:] - hits[:-span] == 0):
            return False
    return True


def max_members_on_paths(paths, members: np.ndarray, n: int) -> int:
    """The largest number of sample vertices met by one path."""
    mark = np.zeros(n, dtype=bool)
    mark[members] = True
    return max((int(mark[np.asarray(p)].sum()) for p in paths), default=0)


def resampling(fn, seed: int, retries: int = 16, telemetry: dict | None = None):
    """Run ``fn(seed)``; on a ``_Retry`` signal try the next seed.  Raises
    :class:`SamplingFailure` after ``retries`` failed attempts."""
    for attempt in range(retries):
        try:
            out = fn(seed + attempt)
        except RetrySample as exc:
            if telemetry is not None:
                telemetry.setdefault("failures", []).append(str(exc))
            continue
        if telemetry is not None:
            telemetry["attempts"] = attempt + 1
            telemetry["seed_used"] = seed + attempt
        return out
    raise SamplingFailure(f"verification failed after {retries} samples")


class RetrySample(Exception):
    pass


# --------------------------------------------------------- gamma selection

@dataclass
class GammaScale:
    gamma: Fraction
    window: int
    level_counts: dict = field(default_factory=dict)
    level_bounds: dict = field(default_factory=dict)


class ConstantTooSmall(ValidationError):
    pass


def gamma_level_count(hist: np.ndarray, gamma: Fraction, i: int, window: int) -> int:
    """Number of pairs whose distance lies within ``window`` of some floor(gamma*j*2^i), j >= 1."""
    top = len(hist) - 1
    step = gamma * (2**i)
    mark = np.zeros(top + 1, dtype=bool)
    j = 1
    while True:
        centre = math.floor(step * j)
        if centre - window > top:
            break
        lo = max(0, centre - window)
        hi = min(top, centre + window)
        if lo <= hi:
            mark[lo:hi + 1] = True
        j += 1
    return int(hist[mark].sum())


def select_gamma(d1: np.ndarray, n: int, c: float = 4.0, window: int = 5, c0: int = 1) -> GammaScale:
    """Scan gamma = 1, 1 + 1/n, ..., 2 and return the first one for which, at every
    level i <= log2(c0*n), at most ``c * n^2/2^i * log2(n)^2`` pairs have a
    distance within ``window`` of a multiple-floor ``floor(gamma*j*2^i)``."""
    d1 = np.asarray(d1)
    fin = d1[(d1 != INF)]
    fin = fin[fin > 0]
    top = int(fin.max()) if fin.size else 0
    hist = np.bincount(fin.astype(np.int64), minlength=top + 1) if fin.size else np.zeros(1, dtype=np.int64)
    n = max(n, 2)
    lg = math.log2(n)
    levels = range(0, max(1, int(math.ceil(math.log2(max(2, c0 * n))))) + 1)
    bounds = {i: c * (n * n / 2**i) * lg * lg for i in levels}
    for k in range(n + 1):
        gamma = Fraction(n + k, n)
        counts = {}
        ok = True
        for i in levels:
            cnt = gamma_level_count(hist, gamma, i, window)
            counts[i] = cnt
            if cnt > bounds[i]:
                ok = False
                break
        if ok:
            return GammaScale(gamma, window, counts, bounds)
    raise ConstantTooSmall(f"no gamma in [1,2] meets the level bounds with c={c}")
