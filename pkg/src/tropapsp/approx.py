"""Additive-error APSP for directed unweighted (or small-weight) graphs.

Phase 1 climbs hop levels l and keeps exact distances for pairs in
R_l x V and V x R_l whose path has at most l edges.  Phase 2 estimates every
pair at level l from D(V, R_l') * D(R_l', V) after rounding both factors down
to multiples of g = floor(f(l')), which makes the product small-entry.  The
minimizing column of the rounded product is then re-evaluated exactly, so the
estimate is the length of a real path and never below the true distance.

With exact factors the re-evaluated sum exceeds the true distance by at most
2*(g - 1) < 2*f(l') <= 2*f(D) for monotone f, so the documented constant is
K = 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, level_schedule, sample_hitting_sets
from .products import minplus
from .semiring import INF, NoPath, ToolkitError, ValidationError

K_CONSTANT = 2


@dataclass(frozen=True)
class ErrorProfile:
    """Error function f given as l**p or as a table {l: f(l)} (missing l use the
    nearest smaller key)."""

    p: float | None = None
    table: tuple | None = None

    def __post_init__(self):
        if self.p is None and self.table is None:
            raise ValidationError("profile needs an exponent or a table")
        if self.p is not None and not (0.0 <= self.p <= 1.0):
            raise ValidationError("exponent must lie in [0, 1]")

    @classmethod
    def power(cls, p: float) -> "ErrorProfile":
        return cls(p=float(p))

    @classmethod
    def from_table(cls, table: dict) -> "ErrorProfile":
        return cls(table=tuple(sorted((int(k), float(v)) for k, v in table.items())))

    def f(self, ell: float) -> float:
        if self.p is not None:
            return float(ell) ** self.p
        best = self.table[0][1]
        for k, v in self.table:
            if k <= ell:
                best = v
        return best

    def validate(self, upto: int) -> None:
        prev_ratio = 0.0
        prev_f = 0.0
        for ell in range(1, max(2, upto) + 1):
            fv = self.f(ell)
            if fv < 0:
                raise ValidationError(f"f({ell}) is negative")
            if fv < prev_f:
                raise ValidationError("f must be nondecreasing")
            ratio = ell / fv if fv > 0 else math.inf
            if ratio < prev_ratio - 1e-12:
                raise ValidationError(f"l/f(l) decreases at l={ell}")
            prev_ratio, prev_f = ratio, fv


def _granularity(profile: ErrorProfile, ell: int, scale: float) -> int:
    return max(1, int(math.floor(scale * profile.f(ell) + 1e-9)))


class _Run:
    def __init__(self, g, profile, seed, c, scale, engine, c0, phase1_only):
        if g.m and g.w.min() < 1:
            raise ValidationError("weights must be positive integers")
        n = g.n
        self.g = g
        self.n = n
        self.c0 = c0 if c0 is not None else max(1, int(g.w.max()) if g.m else 1)
        if g.m and g.w.max() > self.c0:
            raise ValidationError(f"edge weight exceeds c0={self.c0}")
        profile.validate(max(n, 2))
        lv = level_schedule(max(n - 1, 1))
        samples = sample_hitting_sets(n, lv, seed, c)
        samples[lv[0]].vertices = np.arange(n)
        wmat = g.weight_matrix()
        p1 = wmat.copy()
        via = np.full((n, n), -1, dtype=np.int64)
        # phase 1
        for k in range(1, len(lv)):
            ell, prev = lv[k], lv[k - 1]
            r, rp = samples[ell].vertices, samples[prev].vertices
            if r.size == 0:
                continue
            cap = self.c0 * ell
            prod, wit = minplus(p1[np.ix_(r, rp)], p1[rp, :], engine)
            self._update(p1, via, r, None, prod, rp[wit], cap)
            prod, wit = minplus(p1[:, rp], p1[np.ix_(rp, r)], engine)
            self._update(p1, via, None, r, prod, rp[wit], cap)
        self.levels = lv
        self.samples = samples
        self.phase1 = p1
        self.via = via
        est = p1.copy()
        mid = np.full((n, n), -1, dtype=np.int64)
        self.granularity = {}
        if not phase1_only:
            for k in range(1, len(lv)):
                ell, prev = lv[k], lv[k - 1]
                rp = samples[prev].vertices
                if rp.size == 0:
                    continue
                gr = _granularity(profile, prev, scale)
                self.granularity[ell] = gr
                left = p1[:, rp]
                right = p1[rp, :]
                lf = np.where(left == INF, INF, left // gr)
                rf = np.where(right == INF, INF, right // gr)
                prod, wit = minplus(lf, rf, engine)
                fin = prod != INF
                ii, jj = np.nonzero(fin)
                kk = rp[wit[ii, jj]]
                val = p1[ii, kk] + p1[kk, jj]
                better = val < est[ii, jj]
                est[ii[better], jj[better]] = val[better]
                mid[ii[better], jj[better]] = kk[better]
        self.estimate = est
        self.mid = mid

    @staticmethod
    def _update(p1, via, rows, cols, prod, mids, cap):
        if rows is not None:
            cur = p1[rows, :]
            better = (prod < cur) & (prod <= cap)
            ii, jj = np.nonzero(better)
            p1[rows[ii], jj] = prod[ii, jj]
            via[rows[ii], jj] = mids[ii, jj]
        else:
            cur = p1[:, cols]
            better = (prod < cur) & (prod <= cap)
            ii, jj = np.nonzero(better)
            p1[ii, cols[jj]] = prod[ii, jj]
            via[ii, cols[jj]] = mids[ii, jj]

    def phase1_path(self, u, v, depth=0):
        if u == v:
            return [u]
        if depth > 4 * self.n:
            raise ToolkitError("witness recursion does not terminate")
        m = int(self.via[u, v])
        if m < 0:
            return [u, v]
        left = self.phase1_path(u, m, depth + 1)
        right = self.phase1_path(m, v, depth + 1)
        return left + right[1:]

    def path(self, u, v):
        if self.estimate[u, v] == INF:
            raise NoPath(f"no path from {u} to {v}")
        m = int(self.mid[u, v])
        if m < 0:
            return self.phase1_path(u, v)
        return self.phase1_path(u, m) + self.phase1_path(m, v)[1:]


def approx_apsp(g: Graph, profile: ErrorProfile, seed: int = 0, c: float = 4.0,
                granularity_scale: float = 1.0, engine=None, c0: int | None = None,
                phase1_only: bool = False):
    """Return ``(estimate, certificate)``.

    The certificate records K, the per-level rounding granularity and the
    additive slack bound 2*(g-1) used at each level.
    """
    run = _Run(g, profile, seed, c, granularity_scale, engine, c0, phase1_only)
    cert = {
        "K": K_CONSTANT,
        "granularity": dict(run.granularity),
        "slack": {ell: 2 * (gr - 1) for ell, gr in run.granularity.items()},
        "levels": list(run.levels),
        "seed": seed,
    }
    return run.estimate, cert


def approx_apsp_run(g: Graph, profile: ErrorProfile, **kw) -> _Run:
    """The full run object (estimate, phase-1 matrix, witnesses)."""
    return _Run(g, profile, kw.get("seed", 0), kw.get("c", 4.0), kw.get("granularity_scale", 1.0),
                kw.get("engine"), kw.get("c0"), kw.get("phase1_only", False))


def approx_paths(g: Graph, profile: ErrorProfile, pair, seed: int = 0, c: float = 4.0) -> list[int]:
    """A real path for ``pair`` whose length is at most its estimate."""
    run = _Run(g, profile, seed, c, 1.0, None, None, False)
    u, v = pair
    return run.path(int(u), int(v))
