"""Min-plus and counting matrix products.

Engines
-------
brute    cubic loop with inline argmin (numba)
blocked  the same loop tiled over (i, k, j) blocks
scaled   entry ``e`` encoded as ``(n2+1)**e``; the integer product is evaluated
         limb by limb with exact float64 BLAS calls and the lowest non-zero
         base-(n2+1) digit of each cell is the min-plus value
auto     picks scaled or brute from the cost model
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .semiring import (
    DEFAULT_COST, INF, NO_WITNESS, BoundViolation, CostModel, EntryBounds, InvalidArgument,
    PreconditionViolation, as_dist, finite_max, finite_min,
)

_F64_EXACT = 2**53


@dataclass(frozen=True)
class ProductEngine:
    kind: str = "auto"
    block_size: int = 32
    t: int = 4

    def __post_init__(self):
        if self.kind not in ("brute", "blocked", "scaled", "auto"):
            raise InvalidArgument(f"unknown engine kind {self.kind!r}")
        if self.block_size < 1 or self.t < 1:
            raise InvalidArgument("block_size and t must be >= 1")


def _engine(e) -> ProductEngine:
    if e is None:
        return ProductEngine()
    if isinstance(e, str):
        return ProductEngine(e)
    return e


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise InvalidArgument(f"dimension mismatch: {a.shape} x {b.shape}")


# ------------------------------------------------------------------ kernels

@numba.njit(cache=True)
def _brute_kernel(a, b):
    n1, n2 = a.shape
    n3 = b.shape[1]
    inf = np.iinfo(np.int64).max
    c = np.full((n1, n3), inf, dtype=np.int64)
    w = np.full((n1, n3), -1, dtype=np.int64)
    for i in range(n1):
        for k in range(n2):
            x = a[i, k]
            if x == inf:
                continue
            for j in range(n3):
                y = b[k, j]
                if y == inf:
                    continue
                s = x + y
                if s < c[i, j]:
                    c[i, j] = s
                    w[i, j] = k
    return c, w


@numba.njit(cache=True)
def _blocked_kernel(a, b, bs):
    n1, n2 = a.shape
    n3 = b.shape[1]
    inf = np.iinfo(np.int64).max
    c = np.full((n1, n3), inf, dtype=np.int64)
    w = np.full((n1, n3), -1, dtype=np.int64)
    for i0 in range(0, n1, bs):
        for k0 in range(0, n2, bs):
            for j0 in range(0, n3, bs):
                for i in range(i0, min(i0 + bs, n1)):
                    for k in range(k0, min(k0 + bs, n2)):
                        x = a[i, k]
                        if x == inf:
                            continue
                        for j in range(j0, min(j0 + bs, n3)):
                            y = b[k, j]
                            if y == inf:
                                continue
                            s = x + y
                            # keep the smallest k among ties, like the brute kernel
                            if s < c[i, j] or (s == c[i, j] and k < w[i, j]):
                                c[i, j] = s
                                w[i, j] = k
    return c, w


@numba.njit(cache=True)
def _count_kernel(a, b):
    n1, n2 = a.shape
    n3 = b.shape[1]
    inf = np.iinfo(np.int64).max
    c = np.full((n1, n3), inf, dtype=np.int64)
    cnt = np.zeros((n1, n3), dtype=np.int64)
    for i in range(n1):
        for k in range(n2):
            x = a[i, k]
            if x == inf:
                continue
            for j in range(n3):
                y = b[k, j]
                if y == inf:
                    continue
                s = x + y
                if s < c[i, j]:
                    c[i, j] = s
                    cnt[i, j] = 1
                elif s == c[i, j]:
                    cnt[i, j] += 1
    return c, cnt


# ------------------------------------------------------------ scaled engine

def _digits_per_limb(base: int, n2: int) -> int:
    """Largest g with n2 * base**(2g) < 2**53, so limb products stay exact in float64."""
    g = 0
    while n2 * base ** (2 * (g + 1)) < _F64_EXACT:
        g += 1
    return g


def encoded_lowest_digit(a_exp: np.ndarray, a_coef: np.ndarray, b_exp: np.ndarray,
                         b_coef: np.ndarray, base: int):
    """For polynomials P_ij = sum_k a_coef*x**a_exp * b_coef*x**b_exp evaluated at x = base,
    return the exponent and value of the lowest non-zero base-``base`` digit per cell.

    The caller guarantees that no digit overflows, i.e. every coefficient sum is < base.
    Cells with no finite term get (INF, 0).
    """
    n1, n2 = a_exp.shape
    n3 = b_exp.shape[1]
    fa = a_exp != INF
    fb = b_exp != INF
    ea = int(a_exp[fa].max()) if fa.any() else 0
    eb = int(b_exp[fb].max()) if fb.any() else 0
    out_e = np.full((n1, n3), INF, dtype=np.int64)
    out_c = np.zeros((n1, n3), dtype=np.int64)
    if n2 == 0 or not fa.any() or not fb.any():
        return out_e, out_c
    g = _digits_per_limb(base, n2)
    if g == 0:
        return _encoded_lowest_digit_bigint(a_exp, a_coef, b_exp, b_coef, base)
    beta = base**g
    na = ea // g + 1
    nb = eb // g + 1
    pw = np.array([base**d for d in range(g)], dtype=np.float64)

    def limbs(exp, coef, fin, count, transpose):
        rows, cols = exp.shape
        limb = np.where(fin, exp // g, -1)
        off = np.where(fin, exp % g, 0)
        val = coef.astype(np.float64) * pw[off]
        stack = np.zeros((count, rows, cols), dtype=np.float64)
        r, c = np.nonzero(fin)
        stack[limb[r, c], r, c] = val[r, c]
        return stack

    sa = limbs(a_exp, a_coef, fa, na, False).reshape(na * n1, n2)
    sb = limbs(b_exp, b_coef, fb, nb, True).transpose(1, 0, 2).reshape(n2, nb * n3)
    # one BLAS call computes every limb pair product at once
    prod = (sa @ sb).reshape(na, n1, nb, n3)
    prod = np.rint(prod).astype(np.int64)
    nc = na + nb + 1
    tot = np.zeros((nc, n1, n3), dtype=np.int64)
    for a in range(na):
        tot[a:a + nb] += prod[a].transpose(1, 0, 2)
    # carry propagation in base beta
    carry = np.zeros((n1, n3), dtype=np.int64)
    for c in range(nc):
        v = tot[c] + carry
        carry = v // beta
        tot[c] = v - carry * beta
    nz = tot != 0
    has = nz.any(axis=0)
    first = np.argmax(nz, axis=0)
    v = np.take_along_axis(tot, first[None], axis=0)[0]
    found = ~has
    for d in range(g):
        dig = v % base
        v = v // base
        hit = (dig > 0) & ~found
        out_e[hit] = first[hit] * g + d
        out_c[hit] = dig[hit]
        found |= hit
    return out_e, out_c


def _encoded_lowest_digit_bigint(a_exp, a_coef, b_exp, b_coef, base):
    n1 = a_exp.shape[0]
    n3 = b_exp.shape[1]
    ea = np.empty(a_exp.shape, dtype=object)
    eb = np.empty(b_exp.shape, dtype=object)
    for src, coef, dst in ((a_exp, a_coef, ea), (b_exp, b_coef, eb)):
        for idx, e in np.ndenumerate(src):
            dst[idx] = 0 if e == INF else int(coef[idx]) * base ** int(e)
    p = ea.dot(eb)
    out_e = np.full((n1, n3), INF, dtype=np.int64)
    out_c = np.zeros((n1, n3), dtype=np.int64)
    for (i, j), v in np.ndenumerate(p):
        if v == 0:
            continue
        s = 0
        while v % base == 0:
            v //= base
            s += 1
        out_e[i, j] = s
        out_c[i, j] = v % base
    return out_e, out_c


def scaled_encode(m: np.ndarray, base: int) -> np.ndarray:
    """Big-integer encoding: entry e becomes base**e, INF becomes 0."""
    m = as_dist(m)
    out = np.empty(m.shape, dtype=object)
    for idx, e in np.ndenumerate(m):
        out[idx] = 0 if e == INF else base ** int(e)
    return out


def scaled_decode(p: np.ndarray, base: int):
    """Lowest non-zero digit position and its value for each big-integer cell."""
    d = np.full(p.shape, INF, dtype=np.int64)
    cnt = np.zeros(p.shape, dtype=np.int64)
    for idx, v in np.ndenumerate(p):
        v = int(v)
        if v == 0:
            continue
        s = 0
        while v % base == 0:
            v //= base
            s += 1
        d[idx] = s
        cnt[idx] = v % base
    return d, cnt


def _scaled_with_counts(a: np.ndarray, b: np.ndarray):
    n2 = a.shape[1]
    ones_a = np.ones(a.shape, dtype=np.int64)
    ones_b = np.ones(b.shape, dtype=np.int64)
    return encoded_lowest_digit(a, ones_a, b, ones_b, n2 + 1)


def _scaled_witnesses(a, b, c, cnt, seed=0):
    """Witnesses for the scaled engine.

    Cells with a unique minimizer are read off from log2(n2) products restricted
    to the columns whose bit ``t`` is set.  Remaining cells are isolated by
    products over random column subsets, and whatever is still open is resolved
    by a direct scan of that cell.
    """
    n1, n2 = a.shape
    n3 = b.shape[1]
    w = np.full((n1, n3), NO_WITNESS, dtype=np.int64)
    finite = c != INF
    bits = max(1, int(n2 - 1).bit_length())
    idx = np.arange(n2)

    def decode_unique(cols, target):
        # target: cells whose minimum over ``cols`` equals c with exactly one minimizer
        sub_a = a[:, cols]
        sub_b = b[cols, :]
        e, k_cnt = _scaled_with_counts(sub_a, sub_b)
        uniq = target & (e == c) & (k_cnt == 1)
        if not uniq.any():
            return
        acc = np.zeros((n1, n3), dtype=np.int64)
        for t in range(bits):
            mask = ((cols >> t) & 1).astype(bool)
            if not mask.any():
                continue
            e_t, _ = _scaled_with_counts(sub_a[:, mask], sub_b[mask, :])
            acc |= np.where(e_t == c, 1 << t, 0)
        w[uniq] = acc[uniq]

    decode_unique(idx, finite & (cnt == 1))
    rng = np.random.default_rng(seed)
    open_cells = finite & (w == NO_WITNESS)
    rounds = 0
    while open_cells.any() and rounds < 2 * bits:
        p = 0.5 ** (1 + rounds // 2)
        cols = idx[rng.random(n2) < p]
        if cols.size:
            decode_unique(cols, open_cells)
        open_cells = finite & (w == NO_WITNESS)
        rounds += 1
    for i, j in zip(*np.nonzero(open_cells)):
        s = _col_sums(a[i], b[:, j])
        w[i, j] = int(np.argmax(s == c[i, j]))
    return w


def _col_sums(row: np.ndarray, col: np.ndarray) -> np.ndarray:
    bad = (row == INF) | (col == INF)
    s = np.where(bad, 0, row) + np.where(bad, 0, col)
    return np.where(bad, INF, s)


def minplus_scaled(a, b, bounds: EntryBounds | None = None, with_witness: bool = False):
    a = as_dist(a)
    b = as_dist(b)
    _check_dims(a, b)
    if (a[a != INF] < 0).any() or (b[b != INF] < 0).any():
        raise BoundViolation("scaled engine needs non-negative entries")
    if bounds is not None:
        if bounds.max_finite_a is not None and finite_max(a) > bounds.max_finite_a:
            raise BoundViolation("left matrix exceeds its declared entry bound")
        if bounds.max_finite_b is not None and finite_max(b) > bounds.max_finite_b:
            raise BoundViolation("right matrix exceeds its declared entry bound")
    c, cnt = _scaled_with_counts(a, b)
    if with_witness:
        return c, _scaled_witnesses(a, b, c, cnt)
    return c


# ------------------------------------------------------------------ dispatch

def _auto_kind(a, b, cost: CostModel, with_witness: bool = False) -> str:
    n1, n2 = a.shape
    n3 = b.shape[1]
    ell = finite_max(a) + finite_max(b)
    g = max(1, _digits_per_limb(n2 + 1, max(n2, 1)))
    limbs = (ell // g + 1) ** 2
    scaled = limbs * n1 * n2 * n3 * cost.blas_ns_per_flop + cost.product_overhead_ns
    if with_witness:
        # one product per column bit, plus the isolation rounds for tied cells
        scaled *= 2 + max(1, int(n2 - 1).bit_length())
    brute = n1 * n2 * n3 * cost.brute_ns_per_op
    return "scaled" if scaled < brute else "brute"


def minplus(a, b, engine=None, cost: CostModel = DEFAULT_COST, with_witness: bool = True):
    """Min-plus product ``C[i,j] = min_k A[i,k] + B[k,j]``.

    Returns ``(C, W)`` where ``W`` holds a witness column per finite cell, or
    just ``C`` when ``with_witness`` is false.
    """
    a = as_dist(a)
    b = as_dist(b)
    _check_dims(a, b)
    eng = _engine(engine)
    kind = eng.kind
    if kind in ("scaled", "auto") and (finite_min(a) < 0 or finite_min(b) < 0):
        if kind == "scaled":
            # shift to non-negative and undo afterwards
            sa, sb = finite_min(a), finite_min(b)
            a2 = np.where(a == INF, INF, a - sa)
            b2 = np.where(b == INF, INF, b - sb)
            res = minplus(a2, b2, eng, cost, with_witness)
            c = res[0] if with_witness else res
            c = np.where(c == INF, INF, c + sa + sb)
            return (c, res[1]) if with_witness else c
        kind = "brute"
    if kind == "auto":
        kind = _auto_kind(a, b, cost, with_witness)
    if kind == "brute":
        c, w = _brute_kernel(a, b)
    elif kind == "blocked":
        c, w = _blocked_kernel(a, b, eng.block_size)
    else:
        if with_witness:
            c, w = minplus_scaled(a, b, with_witness=True)
        else:
            return minplus_scaled(a, b)
    return (c, w) if with_witness else c


def witness_count_product(a, b) -> np.ndarray:
    """Number of minimizing k per cell (0 where the product is INF)."""
    a = as_dist(a)
    b = as_dist(b)
    _check_dims(a, b)
    return _count_kernel(a, b)[1]


def minplus_with_counts(a, b):
    """Brute product returning (C, number of minimizing k)."""
    a = as_dist(a)
    b = as_dist(b)
    _check_dims(a, b)
    return _count_kernel(a, b)


# ------------------------------------------------------- sparse range product

def minplus_sparse_range(a, b, wanted, t: int = 4, bounds: EntryBounds | None = None,
                         engine=None) -> dict:
    """Selected entries of ``A * B`` where A has small entries and B arbitrary ones.

    ``wanted`` is an iterable of (i, j) cells; returns a dict cell -> value.
    See :func:`minplus_sparse_range_masked` for the method.
    """
    a = as_dist(a)
    b = as_dist(b)
    _check_dims(a, b)
    wanted = list(wanted)
    if not wanted:
        if t < 1:
            raise InvalidArgument("t must be >= 1")
        return {}
    mask = np.zeros((a.shape[0], b.shape[1]), dtype=bool)
    ii = np.array([w[0] for w in wanted], dtype=np.int64)
    jj = np.array([w[1] for w in wanted], dtype=np.int64)
    mask[ii, jj] = True
    out = minplus_sparse_range_masked(a, b, mask, t, bounds, engine)
    return {(int(i), int(j)): int(out[i, j]) for i, j in zip(ii, jj)}


def minplus_sparse_range_masked(a, b, mask, t: int = 4, bounds: EntryBounds | None = None,
                                engine=None) -> np.ndarray:
    """Entries of ``A * B`` on the cells where ``mask`` is true (INF elsewhere).

    A must have non-negative entries of magnitude at most l1; B is arbitrary.
    Each column of B is sorted (ties by row index) and cut into groups of ``t``;
    the last ``< t`` entries are leftovers.  A boolean product finds the first
    group a row can reach, a shifted small-entry product covers the values in
    ``[x, x + l1]`` above that group's maximum ``x``, and the group itself plus
    the leftovers are scanned directly.
    """
    if t < 1:
        raise InvalidArgument("t must be >= 1")
    a = as_dist(a)
    b = as_dist(b)
    _check_dims(a, b)
    mask = np.asarray(mask, dtype=bool)
    n1, n2 = a.shape
    n3 = b.shape[1]
    out = np.full((n1, n3), INF, dtype=np.int64)
    if not mask.any():
        return out
    l1 = finite_max(a)
    if bounds is not None and bounds.max_finite_a is not None:
        if l1 > bounds.max_finite_a:
            raise BoundViolation("left matrix exceeds its declared entry bound")
        l1 = bounds.max_finite_a
    if finite_min(a) < 0:
        raise BoundViolation("left matrix must have non-negative entries")
    bfin = b != INF
    # sort every column by (value, row); INF sorts last
    order = np.lexsort((np.broadcast_to(np.arange(n2)[:, None], b.shape), b), axis=0)
    nfin = bfin.sum(axis=0)
    ngrp = nfin // t
    offs = np.concatenate([[0], np.cumsum(ngrp)])
    ng = int(offs[-1])
    reach = win = xs = None
    if ng:
        gcol = np.repeat(np.arange(n3), ngrp)
        gidx = np.arange(ng) - offs[gcol]
        member = np.zeros((n2, ng), dtype=np.float64)
        for r in range(t):
            member[order[gidx * t + r, gcol], np.arange(ng)] = 1.0
        xs = b[order[gidx * t + t - 1, gcol], gcol]
        bc = b[:, gcol]
        sel = bfin[:, gcol] & (bc >= xs[None, :]) & (bc <= xs[None, :] + l1)
        window = np.where(sel, bc - xs[None, :], INF)
        reach = ((a != INF).astype(np.float64) @ member) > 0
        win = minplus(a, window, engine, with_witness=False)
    ii, jj = np.nonzero(mask)
    if reach is None:
        reach = np.zeros((n1, 0), dtype=np.bool_)
        win = np.zeros((n1, 0), dtype=np.int64)
        xs = np.zeros(0, dtype=np.int64)
    out[ii, jj] = _range_scan(a, b, order, nfin, offs, reach, win, xs, ii, jj, t)
    return out


@numba.njit(cache=True)
def _range_scan(a, b, order, nfin, offs, reach, win, xs, ii, jj, t):
    inf = np.iinfo(np.int64).max
    res = np.empty(len(ii), dtype=np.int64)
    for q in range(len(ii)):
        i = ii[q]
        j = jj[q]
        g0 = offs[j]
        g1 = offs[j + 1]
        best = inf
        for g in range(g0, g1):
            if reach[i, g]:
                if win[i, g] != inf:
                    best = win[i, g] + xs[g]
                base = (g - g0) * t
                for r in range(base, base + t):
                    k = order[r, j]
                    if a[i, k] != inf:
                        s = a[i, k] + b[k, j]
                        if s < best:
                            best = s
                break
        for r in range((g1 - g0) * t, nfin[j]):
            k = order[r, j]
            if a[i, k] != inf:
                s = a[i, k] + b[k, j]
                if s < best:
                    best = s
        res[q] = best
    return res


# -------------------------------------------------------- shifted modular

def check_shift_precondition(a, b) -> bool:
    """B[k,j] <= A[i,k] + A[i,k'] + B[k',j] for all i, k, k', j."""
    a = as_dist(a)
    b = as_dist(b)
    s = minplus(a.T.copy(), a, "brute", with_witness=False)
    rhs = minplus(s, b, "brute", with_witness=False)
    return bool(np.all(b <= rhs))


def minplus_shifted(a, b, ell: int, debug: bool = False, engine=None) -> np.ndarray:
    """Product of A (entries in [0, ell]) with B whose columns vary slowly.

    Six small products against ``(B + t*ell) mod 6*ell`` (t = 0..5); for each
    cell the phase t that puts ``B[k0, j]`` into ``[2ell, 3ell]`` is used, where
    k0 is any finite column of row i.
    """
    a = as_dist(a)
    b = as_dist(b)
    _check_dims(a, b)
    if ell < 1:
        raise InvalidArgument("ell must be >= 1")
    if finite_min(a) < 0 or finite_max(a) > ell:
        raise BoundViolation(f"left matrix entries must lie in [0, {ell}]")
    if debug and not check_shift_precondition(a, b):
        raise PreconditionViolation("right matrix violates B[k,j] <= A[i,k]+A[i,k']+B[k',j]")
    n1, n3 = a.shape[0], b.shape[1]
    mod = 6 * ell
    bfin = b != INF
    hats = []
    prods = []
    for t in range(6):
        h = np.where(bfin, (np.where(bfin, b, 0) + t * ell) % mod, INF)
        hats.append(h)
        prods.append(minplus(a, h, engine, with_witness=False))
    fin_a = a != INF
    has = fin_a.any(axis=1)
    k0 = np.argmax(fin_a, axis=1)
    out = np.full((n1, n3), INF, dtype=np.int64)
    rows = np.nonzero(has)[0]
    if rows.size == 0:
        return out
    b0 = b[k0[rows], :]                       # (r, n3)
    ok = b0 != INF
    s = (2 * ell - np.where(ok, b0, 0)) % mod
    t = (-(-s // ell)) % 6
    hat_stack = np.stack(hats)                # (6, n2, n3)
    prod_stack = np.stack(prods)              # (6, n1, n3)
    jj = np.broadcast_to(np.arange(n3), t.shape)
    bh = hat_stack[t, k0[rows][:, None], jj]
    p = prod_stack[t, rows[:, None], jj]
    val = np.where(ok & (p != INF), p + np.where(ok, b0 - bh, 0), INF)
    out[rows] = val
    return out


# ----------------------------------------------------------- funny products

def funny_product(ab, cd, cap=None):
    """The paired product ``(C, C')``: C is the min-plus product, C' sums
    ``A'[i,k] * B'[k,j]`` over the minimizing k, saturating at ``cap``.

    Evaluated through the encoding ``A'[i,k] * M**A[i,k]`` with M larger than
    any coefficient sum, so the lowest non-zero digit carries both parts.
    """
    da, ca = (as_dist(ab[0]), np.asarray(ab[1], dtype=np.int64))
    db, cb = (as_dist(cd[0]), np.asarray(cd[1], dtype=np.int64))
    _check_dims(da, db)
    if ca.shape != da.shape or cb.shape != db.shape:
        raise InvalidArgument("count matrix shape differs from its distance matrix")
    n2 = da.shape[1]
    # counts of INF entries are ignored
    ca = np.where(da == INF, 0, ca)
    cb = np.where(db == INF, 0, cb)
    if finite_min(da) < 0 or finite_min(db) < 0:
        raise BoundViolation("funny product needs non-negative distances")
    base = n2 * max(1, int(ca.max(initial=0))) * max(1, int(cb.max(initial=0))) + 1
    # zero-count entries behave like INF for the distance part
    da = np.where(ca == 0, INF, da)
    db = np.where(cb == 0, INF, db)
    d, c = encoded_lowest_digit(da, ca, db, cb, base)
    if cap is not None:
        c = np.minimum(c, cap)
    return d, c


def approx_count_product(a, b, U: float, wanted, t: int = 4, ell1: int | None = None) -> dict:
    """Selected entries of the ordinary product of non-negative count matrices,
    each within a factor 1 + O(1/U); ``wanted`` lists (i, j) cells.  See
    :func:`approx_count_product_masked`."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_dims(a, b)
    wanted = list(wanted)
    if t < 1:
        raise InvalidArgument("t must be >= 1")
    if not wanted:
        return {}
    mask = np.zeros((a.shape[0], b.shape[1]), dtype=bool)
    ii = np.array([w[0] for w in wanted], dtype=np.int64)
    jj = np.array([w[1] for w in wanted], dtype=np.int64)
    mask[ii, jj] = True
    out = approx_count_product_masked(a, b, U, mask, t, ell1)
    return {(int(i), int(j)): float(out[i, j]) for i, j in zip(ii, jj)}


def approx_count_product_masked(a, b, U: float, mask, t: int = 4, ell1: int | None = None) -> np.ndarray:
    """Entries of ``A @ B`` (non-negative reals) on ``mask``, zero elsewhere.

    Columns of B are sorted ascending and cut into rank groups of ``t`` (the
    ``< t`` largest entries are leftovers).  For cell (i, j) the highest-rank
    group with a positive partner in row i is found by a boolean product; with
    x its minimum, terms below ``x / (2**l1 * n2 * U)`` are dropped, the group
    and leftovers are summed directly and the lower-ranked terms above the
    threshold come from one ordinary product.
    """
    if t < 1:
        raise InvalidArgument("t must be >= 1")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_dims(a, b)
    mask = np.asarray(mask, dtype=bool)
    n1, n2 = a.shape
    n3 = b.shape[1]
    out = np.zeros((n1, n3), dtype=np.float64)
    if not mask.any():
        return out
    if ell1 is None:
        amax = float(a.max(initial=0.0))
        ell1 = max(0, math.ceil(math.log2(amax))) if amax > 0 else 0
    pos = b > 0
    key = np.where(pos, b, np.inf)
    order = np.lexsort((np.broadcast_to(np.arange(n2)[:, None], b.shape), key), axis=0)
    npos = pos.sum(axis=0)
    ngrp = npos // t
    offs = np.concatenate([[0], np.cumsum(ngrp)]).astype(np.int64)
    ng = int(offs[-1])
    if ng:
        gcol = np.repeat(np.arange(n3), ngrp)
        gidx = np.arange(ng) - offs[gcol]
        member = np.zeros((n2, ng))
        for r in range(t):
            member[order[gidx * t + r, gcol], np.arange(ng)] = 1.0
        xs = b[order[gidx * t, gcol], gcol]
        thr = xs / (2.0**ell1 * n2 * U)
        # rank of every entry inside its own column
        rank = np.empty_like(order)
        np.put_along_axis(rank, order, np.broadcast_to(np.arange(n2)[:, None], b.shape), axis=0)
        bc = b[:, gcol]
        low = np.where(pos[:, gcol] & (rank[:, gcol] < (gidx * t)[None, :]) & (bc >= thr[None, :]), bc, 0.0)
        reach = ((a > 0).astype(np.float64) @ member) > 0
        window = a @ low
    else:
        reach = np.zeros((n1, 0), dtype=np.bool_)
        window = np.zeros((n1, 0))
    ii, jj = np.nonzero(mask)
    out[ii, jj] = _approx_scan(a, b, order, npos, offs, reach, window, ii, jj, t)
    return out


@numba.njit(cache=True)
def _approx_scan(a, b, order, npos, offs, reach, window, ii, jj, t):
    res = np.zeros(len(ii))
    for q in range(len(ii)):
        i = ii[q]
        j = jj[q]
        g0 = offs[j]
        g1 = offs[j + 1]
        total = 0.0
        for g in range(g1 - 1, g0 - 1, -1):
            if reach[i, g]:
                total += window[i, g]
                base = (g - g0) * t
                for r in range(base, base + t):
                    k = order[r, j]
                    total += a[i, k] * b[k, j]
                break
        for r in range((g1 - g0) * t, npos[j]):
            k = order[r, j]
            total += a[i, k] * b[k, j]
        res[q] = total
    return res
