"""Vectorised numpy kernels; the reference the compiled kernels must match bit for bit.

Layouts: one row per trial.  Cell indices returned here are 0-based.
"""
from __future__ import annotations

import numpy as np

from pql.rng import raw_block as _raw_block

BACKEND = "python"


def raw_block(keys, start, count):
    return _raw_block(keys, start, count)


def axis_cells(v: np.ndarray, m: int) -> np.ndarray:
    """0-based cells of values in ``[0, 1)``; same correction rule as ``model.axis_cell``."""
    v = np.asarray(v, dtype=np.float64)
    i = np.floor(v * m)
    i = np.clip(i, 0, m - 1)
    i = np.where(v < i / m, i - 1, i)
    i = np.where((i + 1 < m) & (v >= (i + 1) / m), i + 1, i)
    return i.astype(np.int64)


def replicated_bisection(x, L: int, K: int):
    """Batched 1-D Replicated Bisection (``L = 1``: plain bisection).

    Returns ``(queries[T, L-1+L*K], estimates[T])``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    T = x.shape[0]
    w = 1.0 / L
    n = (L - 1) + L * K
    Q = np.empty((T, n), dtype=np.float64)
    below = np.zeros(T, dtype=np.int64)
    for i in range(1, L):
        q = i * w
        Q[:, i - 1] = q
        below += x > q
    base = below.astype(np.float64) * w
    lo = np.zeros(T)
    hi = np.full(T, w)
    D = np.full(T, w / 2)
    col = L - 1
    for k in range(K):
        for l in range(1, L + 1):
            Q[:, col] = (l - 1) * w + D
            col += 1
        r = x <= base + D
        step = w / 2.0 ** (k + 2)
        hi = np.where(r, D, hi)
        lo = np.where(r, lo, D)
        D = np.where(r, D - step, D + step)
    return Q, base + (lo + hi) / 2


def subcube_table(m: int, d: int) -> np.ndarray:
    """0-based sub-cube components, row-major (last axis fastest): shape ``[m**d, d]``."""
    grids = np.indices((m,) * d).reshape(d, -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


def replicated_bisection_nd(x, m: int, K: int):
    """Batched d-dimensional Replicated Bisection with axis-aligned queries.

    Returns ``(offsets[T, n], axes[n], estimates[T, d])``; query ``i`` of trial
    ``t`` is the hyperplane ``x[axes[i]] = offsets[t, i]``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    T, d = x.shape
    L = m ** d
    w = 1.0 / m
    n = d * m + L * d * K
    off = np.empty((T, n), dtype=np.float64)
    axes = np.empty(n, dtype=np.int64)
    star = np.zeros((T, d), dtype=np.int64)
    col = 0
    for k in range(d):
        below = np.zeros(T, dtype=np.int64)
        for j in range(m):
            q = j * w
            off[:, col] = q
            axes[col] = k
            col += 1
            below += x[:, k] > q
        star[:, k] = np.maximum(below, 1)
    cubes = subcube_table(m, d)
    base = (star - 1).astype(np.float64) * w
    lo = np.zeros((T, d))
    hi = np.full((T, d), w)
    D = np.full((T, d), w / 2)
    for rnd in range(K):
        step = w / 2.0 ** (rnd + 2)
        for k in range(d):
            for c in range(L):
                off[:, col] = cubes[c, k] * w + D[:, k]
                axes[col] = k
                col += 1
            r = x[:, k] <= base[:, k] + D[:, k]
            hi[:, k] = np.where(r, D[:, k], hi[:, k])
            lo[:, k] = np.where(r, lo[:, k], D[:, k])
            D[:, k] = np.where(r, D[:, k] - step, D[:, k] + step)
    return off, axes, base + (lo + hi) / 2


def tally_points(values, mask, m: int) -> np.ndarray:
    """Per-trial counts of (unmasked) values in each of ``m`` cells; out-of-range values drop."""
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    T = values.shape[0]
    keep = mask & (values >= 0.0) & (values < 1.0)
    cells = axis_cells(np.where(keep, values, 0.0), m)
    flat = cells + m * np.arange(T, dtype=np.int64)[:, None]
    counts = np.bincount(flat[keep], minlength=T * m)
    return counts.reshape(T, m).astype(np.int64)


def tally_axis_hyperplanes(offsets, axes, mask, m: int, d: int) -> np.ndarray:
    """Per-trial counts of axis-aligned hyperplanes meeting each closed sub-cube.

    A hyperplane ``x_k = c`` meets every cube whose ``k``-th slab
    ``[i/m, (i+1)/m]`` contains ``c``; two slabs when ``c`` is a boundary.
    Returns ``[T, m**d]`` in row-major cube order.
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    T, n = offsets.shape
    slab = np.zeros((T, d, m), dtype=np.int64)
    rows = np.arange(T)
    for i in range(n):
        c = offsets[:, i]
        k = int(axes[i])
        ok = mask[:, i] & (c >= 0.0) & (c <= 1.0)
        j = axis_cells(np.where(ok & (c < 1.0), c, 0.0), m)
        j = np.where(c >= 1.0, m, j)
        inside = ok & (j < m)
        np.add.at(slab, (rows[inside], k, j[inside]), 1)
        left = ok & (j >= 1) & (c == j / m)
        np.add.at(slab, (rows[left], k, j[left] - 1), 1)
    grid = np.zeros((T,) + (m,) * d, dtype=np.int64)
    for k in range(d):
        shape = [T] + [1] * d
        shape[k + 1] = m
        grid = grid + slab[:, k, :].reshape(shape)
    return grid.reshape(T, m ** d)


def proportional_pick(weights, u) -> np.ndarray:
    """Inverse-CDF sample per row: smallest ``j`` with ``cum[j] > u * total``.

    Returns -1 for rows whose total weight is not positive.
    """
    W = np.asarray(weights, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    cum = np.cumsum(W, axis=1)
    total = cum[:, -1]
    t = u * total
    idx = (cum <= t[:, None]).sum(axis=1)
    M = W.shape[1]
    pos = W > 0
    last = M - 1 - np.argmax(pos[:, ::-1], axis=1)
    idx = np.where(idx >= M, last, idx)
    return np.where(total > 0, idx, -1).astype(np.int64)


def hyperplane_cell_hits(normals, offsets, m: int, chunk: int = 256) -> np.ndarray:
    """Number of closed grid cubes each hyperplane meets (corner-sign test)."""
    A = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    b = np.asarray(offsets, dtype=np.float64).reshape(-1)
    H, d = A.shape
    c = np.arange(m + 1, dtype=np.float64) / m
    out = np.empty(H, dtype=np.int64)
    for s in range(0, H, chunk):
        a = A[s : s + chunk]
        h = a.shape[0]
        v = np.zeros((h,) + (m + 1,) * d)
        for k in range(d):
            shape = [h] + [1] * d
            shape[k + 1] = m + 1
            v = v + (a[:, k][:, None] * c[None, :]).reshape(shape)
        v = v - b[s : s + chunk].reshape((h,) + (1,) * d)
        lo = None
        hi = None
        for corner in np.ndindex(*(2,) * d):
            sl = (slice(None),) + tuple(slice(o, o + m) for o in corner)
            piece = v[sl]
            lo = piece if lo is None else np.minimum(lo, piece)
            hi = piece if hi is None else np.maximum(hi, piece)
        hit = (lo <= 0.0) & (hi >= 0.0)
        out[s : s + h] = hit.reshape(h, -1).sum(axis=1)
    return out
