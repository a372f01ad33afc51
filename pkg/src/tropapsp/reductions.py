"""Encoders that turn a rectangular min-plus product into shortest-path
instances, the matching decoders, and the randomized reduction from min-plus
to shortest-path counting.

Every gadget stores its decode map (rows, columns, offset, scale, sign), so
decoding never depends on which solver produced the distances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import BLUE, RED, Graph
from .products import minplus
from .semiring import INF, InvalidArgument, ParseError, ProbabilisticFailure, ValidationError, as_dist


@dataclass
class MinPlusInstance:
    """A (n1 x n2) and B (n2 x n3) with finite entries in [1, M]; INF allowed."""

    A: np.ndarray
    B: np.ndarray
    M: int | None = None

    def __post_init__(self):
        self.A = as_dist(self.A)
        self.B = as_dist(self.B)
        if self.A.shape[1] != self.B.shape[0]:
            raise InvalidArgument(f"inner dimensions differ: {self.A.shape} and {self.B.shape}")
        fin = np.concatenate([self.A[self.A != INF], self.B[self.B != INF]])
        if self.M is None:
            self.M = int(fin.max(initial=1))
        if fin.size and fin.min() < 1:
            raise ValidationError("min-plus entries must be positive integers")
        if fin.size and fin.max() > self.M:
            raise ValidationError(f"entry {int(fin.max())} exceeds the declared bound M={self.M}")

    @property
    def shape(self):
        return self.A.shape[0], self.A.shape[1], self.B.shape[1]


def _instance(inst) -> MinPlusInstance:
    if isinstance(inst, MinPlusInstance):
        return inst
    a, b = inst[:2]
    return MinPlusInstance(a, b, inst[2] if len(inst) > 2 else None)


def brute_minplus(inst) -> np.ndarray:
    inst = _instance(inst)
    return minplus(inst.A, inst.B, "brute", with_witness=False)


# ------------------------------------------------------------ decode maps

@dataclass
class DecodeMap:
    """value = sign * (dist[row, col] - offset) / scale; ``rounding`` is "exact"
    (the division must be exact) or "nearest"."""

    kind: str
    rows: list
    cols: list
    offset: int = 2
    scale: int = 1
    sign: int = 1
    rounding: str = "exact"
    component: str = "dist"
    spines: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def decode(self, dist) -> np.ndarray:
        if self.component in ("d1", "d2"):
            dist = dist[0] if self.component == "d1" else dist[1]
        d = np.asarray(dist)
        sub = d[np.ix_(self.rows, self.cols)].astype(np.int64)
        fin = sub != INF
        raw = self.sign * (np.where(fin, sub, self.offset) - self.offset)
        if self.rounding == "nearest":
            val = np.floor(raw / self.scale + 0.5).astype(np.int64)
        else:
            if np.any(raw[fin] % self.scale):
                raise ValidationError("distance is not on the decode grid")
            val = raw // self.scale
        return np.where(fin, val, INF).astype(np.int64)

    def to_text(self) -> str:
        lines = [f"kind {self.kind}", f"component {self.component}", f"offset {self.offset}",
                 f"scale {self.scale}", f"sign {self.sign}", f"rounding {self.rounding}",
                 "rows " + " ".join(map(str, self.rows)), "cols " + " ".join(map(str, self.cols))]
        for p, ids in sorted(self.spines.items()):
            lines.append(f"spine {p} " + " ".join(map(str, ids)))
        for k, v in sorted(self.extra.items()):
            lines.append(f"extra {k} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DecodeMap":
        kw = {"spines": {}, "extra": {}}
        for no, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            parts = rest.split()
            try:
                if key in ("kind", "component", "rounding"):
                    kw[key] = parts[0]
                elif key in ("offset", "scale", "sign"):
                    kw[key] = int(parts[0])
                elif key in ("rows", "cols"):
                    kw[key] = [int(x) for x in parts]
                elif key == "spine":
                    kw["spines"][int(parts[0])] = [int(x) for x in parts[1:]]
                elif key == "extra":
                    kw["extra"][parts[0]] = _scalar(" ".join(parts[1:]))
                else:
                    raise ParseError(f"line {no}: unknown key {key!r}")
            except (IndexError, ValueError) as exc:
                raise ParseError(f"line {no}: {exc}") from exc
        for need in ("kind", "rows", "cols"):
            if need not in kw:
                raise ParseError(f"decode map lacks {need!r}")
        return cls(**kw)


def _scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


@dataclass
class GadgetGraph:
    graph: Graph
    decode_map: DecodeMap

    def decode(self, dist) -> np.ndarray:
        return self.decode_map.decode(dist)

    @property
    def I(self):
        return self.decode_map.rows

    @property
    def J(self):
        return self.decode_map.cols


# ------------------------------------------------------------ spine gadget

def _spine_layout(inst, step, middle):
    """I = 0..n1-1, J = n1..n1+n3-1, then one spine per column p:
    x_M ~> ... ~> x_0 ~> y_0 ~> ... ~> y_M with ``step`` arcs between
    consecutive x (and y) points and ``middle`` arcs from x_0 to y_0.
    Returns (n, edge list, colors, spines)."""
    n1, n2, n3 = inst.shape
    M = inst.M
    per = 2 * M * step + middle + 1
    edges, colors, spines = [], [], {}
    for p in range(n2):
        b0 = n1 + n3 + p * per
        ids = list(range(b0, b0 + per))
        spines[p] = ids
        edges += [(b0 + q, b0 + q + 1) for q in range(per - 1)]
        colors += [BLUE] * (per - 1)

        def x(a):
            return b0 + (M - a) * step

        def y(b):
            return b0 + M * step + middle + b * step

        for i in range(n1):
            if inst.A[i, p] != INF:
                edges.append((i, x(int(inst.A[i, p]))))
                colors.append(RED)
        for j in range(n3):
            if inst.B[p, j] != INF:
                edges.append((y(int(inst.B[p, j])), n1 + j))
                colors.append(RED)
    n = n1 + n3 + n2 * per
    return n, edges, colors, spines


def encode_minplus_as_uapsp(inst) -> GadgetGraph:
    """Directed unweighted gadget: dist(i, j) = 2 + (A*B)[i, j]; n1 + n3 + n2(2M+1)
    vertices."""
    inst = _instance(inst)
    n1, n2, n3 = inst.shape
    n, edges, _, spines = _spine_layout(inst, 1, 0)
    g = Graph(n, edges, directed=True)
    dm = DecodeMap("uapsp", list(range(n1)), list(range(n1, n1 + n3)), offset=2, spines=spines,
                   extra={"M": inst.M})
    return GadgetGraph(g, dm)


def encode_minplus_as_dag_aplp(inst) -> GadgetGraph:
    """The same DAG built from the complements M+1-A and M+1-B; the longest
    i-j path is 2 + max(Abar + Bbar), so A*B = 2 + 2M - (longest - 2)."""
    inst = _instance(inst)
    M = inst.M
    comp = MinPlusInstance(np.where(inst.A == INF, INF, M + 1 - inst.A),
                           np.where(inst.B == INF, INF, M + 1 - inst.B), M)
    gg = encode_minplus_as_uapsp(comp)
    gg.decode_map.kind = "dag_aplp"
    gg.decode_map.offset = 4 + 2 * M
    gg.decode_map.sign = -1
    return gg


def encode_minplus_as_2red(inst, c: int = 2) -> GadgetGraph:
    """Undirected colored gadget: blue spines, red arcs from I and into J, so a
    path with at most two red edges has length 2 + (A*B)[i, j].  For a budget
    c > 2 each i gets a red pendant path of length c - 2 and is queried from
    its far end."""
    inst = _instance(inst)
    c = int(c)
    if c < 2:
        raise InvalidArgument("the red budget must be at least 2")
    n1, n2, n3 = inst.shape
    n, edges, colors, spines = _spine_layout(inst, 1, 0)
    rows = list(range(n1))
    if c > 2:
        rows = []
        for i in range(n1):
            prev = i
            for _ in range(c - 2):
                edges.append((prev, n))
                colors.append(RED)
                prev = n
                n += 1
            rows.append(prev)
    g = Graph(n, edges, directed=False, color=colors)
    dm = DecodeMap("2red", rows, list(range(n1, n1 + n3)), offset=c, spines=spines,
                   extra={"M": inst.M, "budget": c})
    return GadgetGraph(g, dm)


def encode_minplus_as_aplsp01(inst) -> GadgetGraph:
    """The two-red gadget with red edges of weight 1 and blue edges of weight 0:
    every I-J distance is 2 and the fewest-edge such path has 2 + (A*B)[i, j]
    edges."""
    inst = _instance(inst)
    n1, n2, n3 = inst.shape
    n, edges, colors, spines = _spine_layout(inst, 1, 0)
    wedges = [(u, v, 1 if col == RED else 0) for (u, v), col in zip(edges, colors)]
    g = Graph(n, wedges, directed=False, w2=[1] * len(wedges))
    dm = DecodeMap("aplsp01", list(range(n1)), list(range(n1, n1 + n3)), offset=2, component="d2",
                   spines=spines, extra={"M": inst.M})
    return GadgetGraph(g, dm)


def encode_minplus_as_vertex_weighted(inst) -> GadgetGraph:
    """The two-red gadget without colors, spine vertices of weight 1 and I, J
    vertices of weight 2M: dist(i, j) = 4M + 1 + (A*B)[i, j]."""
    inst = _instance(inst)
    n1, n2, n3 = inst.shape
    M = inst.M
    n, edges, _, spines = _spine_layout(inst, 1, 0)
    vw = [2 * M] * (n1 + n3) + [1] * (n - n1 - n3)
    g = Graph(n, edges, directed=False, vweights=vw)
    dm = DecodeMap("vertex_weighted", list(range(n1)), list(range(n1, n1 + n3)), offset=4 * M + 1,
                   spines=spines, extra={"M": M})
    return GadgetGraph(g, dm)


def encode_minplus_additive_lb(inst, f, ell: int, check_bounds: bool = True) -> GadgetGraph:
    """Directed unweighted gadget with spine steps of length s = ceil(6 f(l)) and a
    middle path of length l - 2: dist(i, j) = l + s*(A*B)[i, j].  Decoding rounds
    to the nearest multiple of s, so any estimate within 2 f(l) decodes exactly.

    ``f`` is an ErrorProfile or a callable.  Entries must not exceed
    l / (12 f(l)) unless ``check_bounds`` is false.
    """
    inst = _instance(inst)
    ell = int(ell)
    fv = float(f.f(ell) if hasattr(f, "f") else f(ell))
    if ell < 2 or fv <= 0:
        raise ValidationError("need l >= 2 and f(l) > 0")
    if 6 * fv > ell:
        raise ValidationError(f"f({ell}) = {fv:g} exceeds l/6: the spine steps would outgrow the middle path")
    if hasattr(f, "validate"):
        f.validate(2 * ell)
    bound = ell / (12 * fv)
    if check_bounds and inst.M > bound:
        raise ValidationError(f"entries up to {inst.M} exceed l/(12 f(l)) = {bound:g}")
    step = math.ceil(6 * fv - 1e-9)
    n1, n2, n3 = inst.shape
    n, edges, _, spines = _spine_layout(inst, step, ell - 2)
    g = Graph(n, edges, directed=True)
    dm = DecodeMap("additive_lb", list(range(n1)), list(range(n1, n1 + n3)), offset=ell, scale=step,
                   rounding="nearest", spines=spines, extra={"M": inst.M, "ell": ell, "f": fv})
    return GadgetGraph(g, dm)


ENCODERS = {
    "uapsp": encode_minplus_as_uapsp,
    "dag_aplp": encode_minplus_as_dag_aplp,
    "2red": encode_minplus_as_2red,
    "aplsp01": encode_minplus_as_aplsp01,
    "vertex_weighted": encode_minplus_as_vertex_weighted,
}


# ------------------------------------------------------- matching solvers

def dag_longest_paths_via_negation(g: Graph) -> np.ndarray:
    """Longest paths of a DAG as minus the shortest paths under negated weights."""
    from .exact import zwick_apsp
    neg = g.with_arrays(w=-g.w)
    d = zwick_apsp(neg)
    return np.where(d == INF, INF, -d)


def vertex_weighted_distances(g: Graph) -> np.ndarray:
    """Vertex-weighted distances (endpoints included) by moving each vertex
    weight onto the arcs entering it and adding the source weight."""
    from .exact import zwick_apsp
    if g.vweights is None:
        raise ValidationError("graph has no vertex weights")
    s, t, _, _, _ = g.arcs()
    arcg = Graph(g.n, list(zip(s.tolist(), t.tolist(), g.vweights[t].tolist())), directed=True)
    d = zwick_apsp(arcg)
    return np.where(d == INF, INF, d + g.vweights[:, None])


def solve_gadget(gg: GadgetGraph) -> np.ndarray:
    """Decoded product using the solver that matches the gadget kind."""
    from .exact import cred_apsp, zwick_apsp
    from .lex2 import aplsp
    from .approx import ErrorProfile, approx_apsp
    kind = gg.decode_map.kind
    g = gg.graph
    if kind == "uapsp":
        return gg.decode(zwick_apsp(g))
    if kind == "dag_aplp":
        return gg.decode(dag_longest_paths_via_negation(g))
    if kind == "2red":
        return gg.decode(cred_apsp(g, int(gg.decode_map.extra["budget"])))
    if kind == "aplsp01":
        return gg.decode(aplsp(g))
    if kind == "vertex_weighted":
        return gg.decode(vertex_weighted_distances(g))
    if kind == "additive_lb":
        fv = float(gg.decode_map.extra["f"])
        ell = int(gg.decode_map.extra["ell"])
        ratio = ell / fv
        # the profile f(x) = x / ratio for x >= l is the one the gadget was built for
        table = {x: x / ratio for x in range(ell, 2 * ell + 1)}
        table[1] = fv
        est, _ = approx_apsp(g, ErrorProfile.from_table(table), granularity_scale=0.5)
        return gg.decode(est)
    raise InvalidArgument(f"unknown gadget kind {kind!r}")


# --------------------------------------------- min witness equality

def encode_minplus_as_minwitness_eq(inst, pad: bool = False):
    """Returns (A', B', decode) with A'[i, (v,k)] = A[i,k] and
    B'[(v,k), j] = v - B[k,j], columns ordered by v first.  ``decode`` maps a
    witness-index matrix to A*B.  INF entries become sentinels that never match.
    """
    inst = _instance(inst)
    n1, n2, n3 = inst.shape
    M = inst.M
    nv = 2 * M + 1
    sa, sb = 4 * M + 7, -(4 * M + 7)
    A, B = inst.A, inst.B
    a2 = np.empty((n1, nv * n2), dtype=np.int64)
    b2 = np.empty((nv * n2, n3), dtype=np.int64)
    for v in range(nv):
        a2[:, v * n2:(v + 1) * n2] = np.where(A == INF, sa, A)
        b2[v * n2:(v + 1) * n2, :] = np.where(B == INF, sb, v - B)
    if pad:
        N = max(n1, n3, nv * n2)
        pa = np.full((N, N), sa, dtype=np.int64)
        pb = np.full((N, N), sb, dtype=np.int64)
        pa[:n1, :nv * n2] = a2
        pb[:nv * n2, :n3] = b2
        a2, b2 = pa, pb

    def decode(w):
        w = np.asarray(w)[:n1, :n3]
        ok = (w >= 0) & (w < nv * n2)
        return np.where(ok, w // n2, INF).astype(np.int64)

    return a2, b2, decode


@numba.njit(cache=True)
def _first_equal(a, b):
    n1, n2 = a.shape
    n3 = b.shape[1]
    out = np.full((n1, n3), -1, dtype=np.int64)
    for i in range(n1):
        for j in range(n3):
            for k in range(n2):
                if a[i, k] == b[k, j]:
                    out[i, j] = k
                    break
    return out


def brute_minwitness_eq(a, b) -> np.ndarray:
    """Smallest k with A[i,k] = B[k,j] per cell, -1 when there is none."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise InvalidArgument(f"dimension mismatch: {a.shape} and {b.shape}")
    return _first_equal(a, b)


# ------------------------------------- min-plus through counting, randomized

def _default_counter(mode: str, U: int):
    from .counting import count_capped_directed, count_mod_directed
    if mode == "mod":
        return lambda g: count_mod_directed(g, U).counts
    return lambda g: count_capped_directed(g, U).counts


def _read_bit(cnt, mode, U):
    """1 / 0 for two / one witnesses, -1 when the count fits neither."""
    if mode == "mod":
        r = cnt % U
        two, one = 2 % U, 1 % U
    else:
        r = np.minimum(cnt, U)
        two, one = 2, 1
    return np.where(r == two, 1, np.where(r == one, 0, -1))


def unique_minplus_via_counting(inst, solver=None, U: int = 2, mode: str = "mod", rounds: int | None = None,
                                seed: int = 0, telemetry: dict | None = None) -> np.ndarray:
    """A*B from shortest-path counts alone.

    Stage t keeps every column k with probability 2**-t (stage 0 keeps all,
    once) and repeats ``rounds`` times.  For each kept set and each bit b,
    columns whose index has bit b set are duplicated, the uapsp gadget of the
    result goes through the counting ``solver`` and a count of 2 (mod U) versus
    1 reads the bit of a unique minimizer.  The decoded k, if kept, yields the
    real value A[i,k] + B[k,j] and each cell keeps its minimum.

    ``solver(graph)`` returns a count matrix (mod U or capped at U as
    ``mode`` says).  Raises ProbabilisticFailure when some finite cell never
    received a candidate.
    """
    inst = _instance(inst)
    if mode not in ("mod", "capped"):
        raise InvalidArgument("mode must be 'mod' or 'capped'")
    U = int(U)
    if U < 2:
        raise InvalidArgument("U must be >= 2")
    if solver is None:
        solver = _default_counter(mode, U)
    A, B, M = inst.A, inst.B, inst.M
    n1, n2, n3 = inst.shape
    bits = max(1, math.ceil(math.log2(max(n2, 2))))
    if rounds is None:
        rounds = max(4, math.ceil(2 * math.log2(n1 * n2 * n3 + 1)))
    rng = np.random.default_rng(seed)
    best = np.full((n1, n3), INF, dtype=np.int64)
    reach = ((A != INF).astype(np.float64) @ (B != INF).astype(np.float64)) > 0
    stats = {"seed": seed, "rounds": rounds, "stages": []}
    for t in range(bits + 1):
        st = {"stage": t, "rounds": 0, "improved": 0, "candidates": 0}
        for _ in range(1 if t == 0 else rounds):
            keep = np.nonzero(rng.random(n2) < 2.0**-t)[0] if t else np.arange(n2)
            if keep.size == 0:
                continue
            st["rounds"] += 1
            k_hat = np.zeros((n1, n3), dtype=np.int64)
            valid = np.ones((n1, n3), dtype=bool)
            for b in range(bits):
                cols = list(keep) + [k for k in keep if (k >> b) & 1]
                gg = encode_minplus_as_uapsp(MinPlusInstance(A[:, cols], B[cols, :], M))
                cnt = np.asarray(solver(gg.graph))
                bit = _read_bit(cnt[np.ix_(gg.I, gg.J)].astype(np.int64), mode, U)
                valid &= bit >= 0
                k_hat |= np.where(bit > 0, 1 << b, 0)
            kept = np.zeros(n2, dtype=bool)
            kept[keep] = True
            ok = valid & (k_hat < n2)
            ok &= kept[np.where(ok, k_hat, 0)]
            ii, jj = np.nonzero(ok)
            kk = k_hat[ii, jj]
            a, bb = A[ii, kk], B[kk, jj]
            fin = (a != INF) & (bb != INF)
            ii, jj, val = ii[fin], jj[fin], (a + bb)[fin]
            st["candidates"] += int(ii.size)
            better = val < best[ii, jj]
            st["improved"] += int(better.sum())
            best[ii[better], jj[better]] = val[better]
        stats["stages"].append(st)
    missing = reach & (best == INF)
    stats["missing"] = int(missing.sum())
    if telemetry is not None:
        telemetry.update(stats)
    if missing.any():
        raise ProbabilisticFailure(f"{int(missing.sum())} cells got no candidate after {rounds} rounds per stage: {stats}")
    return best
