# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.  Same signatures and bit-identical results as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ldexp
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline Py_ssize_t _cell(double v, Py_ssize_t m) noexcept nogil:
    cdef double fi = floor(v * m)
    if fi > m - 1:
        fi = m - 1
    if fi < 0:
        fi = 0
    cdef Py_ssize_t i = <Py_ssize_t>fi
    if v < i / <double>m:
        i -= 1
    elif i + 1 < m and v >= (i + 1) / <double>m:
        i += 1
    return i


def raw_block(keys, Py_ssize_t start, Py_ssize_t count):
    cdef const uint64_t[::1] k = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t T = k.shape[0], t, j
    out = np.empty((T, count), dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    with nogil:
        for t in range(T):
            for j in range(count):
                o[t, j] = _mix(k[t] + <uint64_t>(start + j + 1) * GOLDEN)
    return out


def axis_cells(v, Py_ssize_t m):
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64).ravel()
    out = np.empty(vv.shape[0], dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(vv.shape[0]):
            o[i] = _cell(vv[i], m)
    return out.reshape(np.shape(v))


def replicated_bisection(x, Py_ssize_t L, Py_ssize_t K):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t T = xv.shape[0]
    cdef Py_ssize_t n = (L - 1) + L * K
    Q = np.empty((T, n), dtype=np.float64)
    est = np.empty(T, dtype=np.float64)
    cdef double[:, ::1] q = Q
    cdef double[::1] e = est
    cdef double w = 1.0 / L
    cdef double base, lo, hi, D, step, xt
    cdef Py_ssize_t t, i, k, l, col, below
    with nogil:
        for t in range(T):
            xt = xv[t]
            below = 0
            for i in range(1, L):
                q[t, i - 1] = i * w
                if xt > i * w:
                    below += 1
            base = below * w
            lo = 0.0
            hi = w
            D = w / 2
            col = L - 1
            for k in range(K):
                for l in range(1, L + 1):
                    q[t, col] = (l - 1) * w + D
                    col += 1
                step = ldexp(w, -(k + 2))
                if xt <= base + D:
                    hi = D
                    D = D - step
                else:
                    lo = D
                    D = D + step
            e[t] = base + (lo + hi) / 2
    return Q, est


def replicated_bisection_nd(x, Py_ssize_t m, Py_ssize_t K):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t T = xv.shape[0], d = xv.shape[1]
    cdef Py_ssize_t L = m ** d
    cdef Py_ssize_t n = d * m + L * d * K
    cdef double w = 1.0 / m
    off = np.empty((T, n), dtype=np.float64)
    axes = np.empty(n, dtype=np.int64)
    est = np.empty((T, d), dtype=np.float64)
    cdef double[:, ::1] o = off
    cdef int64_t[::1] ax = axes
    cdef double[:, ::1] e = est
    cubes_np = np.ascontiguousarray(np.indices((m,) * d).reshape(d, -1).T, dtype=np.int64)
    cdef const int64_t[:, ::1] cubes = cubes_np
    cdef double *base = <double *>malloc(d * sizeof(double))
    cdef double *lo = <double *>malloc(d * sizeof(double))
    cdef double *hi = <double *>malloc(d * sizeof(double))
    cdef double *D = <double *>malloc(d * sizeof(double))
    cdef Py_ssize_t t, k, j, c, rnd, col, below
    cdef double step, xk
    if base == NULL or lo == NULL or hi == NULL or D == NULL:
        free(base); free(lo); free(hi); free(D)
        raise MemoryError()
    col = 0
    for k in range(d):
        for j in range(m):
            ax[col] = k
            col += 1
    for rnd in range(K):
        for k in range(d):
            for c in range(L):
                ax[col] = k
                col += 1
    try:
        with nogil:
            for t in range(T):
                col = 0
                for k in range(d):
                    below = 0
                    xk = xv[t, k]
                    for j in range(m):
                        o[t, col] = j * w
                        col += 1
                        if xk > j * w:
                            below += 1
                    if below < 1:
                        below = 1
                    base[k] = (below - 1) * w
                    lo[k] = 0.0
                    hi[k] = w
                    D[k] = w / 2
                for rnd in range(K):
                    step = ldexp(w, -(rnd + 2))
                    for k in range(d):
                        for c in range(L):
                            o[t, col] = cubes[c, k] * w + D[k]
                            col += 1
                        if xv[t, k] <= base[k] + D[k]:
                            hi[k] = D[k]
                            D[k] = D[k] - step
                        else:
                            lo[k] = D[k]
                            D[k] = D[k] + step
                for k in range(d):
                    e[t, k] = base[k] + (lo[k] + hi[k]) / 2
    finally:
        free(base); free(lo); free(hi); free(D)
    return off, axes, est


def tally_points(values, mask, Py_ssize_t m):
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const cnp.uint8_t[:, ::1] mk = np.ascontiguousarray(mask, dtype=bool).view(np.uint8)
    cdef Py_ssize_t T = v.shape[0], n = v.shape[1], t, i
    out = np.zeros((T, m), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef double c
    with nogil:
        for t in range(T):
            for i in range(n):
                c = v[t, i]
                if mk[t, i] and c >= 0.0 and c < 1.0:
                    o[t, _cell(c, m)] += 1
    return out


def tally_axis_hyperplanes(offsets, axes, mask, Py_ssize_t m, Py_ssize_t d):
    cdef const double[:, ::1] off = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef const int64_t[::1] ax = np.ascontiguousarray(axes, dtype=np.int64)
    cdef const cnp.uint8_t[:, ::1] mk = np.ascontiguousarray(mask, dtype=bool).view(np.uint8)
    cdef Py_ssize_t T = off.shape[0], n = off.shape[1]
    cdef Py_ssize_t M = m ** d
    out = np.zeros((T, M), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cdef int64_t *slab = <int64_t *>malloc(d * m * sizeof(int64_t))
    cdef Py_ssize_t t, i, j, k, f, rest
    cdef int64_t s
    cdef double c
    if slab == NULL:
        raise MemoryError()
    try:
        with nogil:
            for t in range(T):
                for i in range(d * m):
                    slab[i] = 0
                for i in range(n):
                    c = off[t, i]
                    if not mk[t, i] or c < 0.0 or c > 1.0:
                        continue
                    k = ax[i]
                    if c < 1.0:
                        j = _cell(c, m)
                    else:
                        j = m
                    if j < m:
                        slab[k * m + j] += 1
                    if j >= 1 and c == j / <double>m:
                        slab[k * m + j - 1] += 1
                for f in range(M):
                    rest = f
                    s = 0
                    for k in range(d - 1, -1, -1):
                        s += slab[k * m + rest % m]
                        rest = rest // m
                    o[t, f] = s
    finally:
        free(slab)
    return out


def proportional_pick(weights, u):
    cdef const double[:, ::1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t T = W.shape[0], M = W.shape[1], t, j, idx, last
    out = np.empty(T, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef double cum, total, thr
    with nogil:
        for t in range(T):
            total = 0.0
            last = 0
            for j in range(M):
                total = total + W[t, j]
                if W[t, j] > 0:
                    last = j
            if not total > 0:
                o[t] = -1
                continue
            thr = uu[t] * total
            cum = 0.0
            idx = 0
            for j in range(M):
                cum = cum + W[t, j]
                if cum <= thr:
                    idx += 1
            if idx >= M:
                idx = last
            o[t] = idx
    return out


def hyperplane_cell_hits(normals, offsets, Py_ssize_t m, Py_ssize_t chunk=256):
    cdef const double[:, ::1] A = np.ascontiguousarray(np.atleast_2d(normals), dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(offsets, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t H = A.shape[0], d = A.shape[1]
    cdef Py_ssize_t nv = (m + 1) ** d, nc = m ** d, nk = 1 << d
    out = np.zeros(H, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef double *v = <double *>malloc(nv * sizeof(double))
    cdef Py_ssize_t *stride = <Py_ssize_t *>malloc(d * sizeof(Py_ssize_t))
    cdef Py_ssize_t *corner = <Py_ssize_t *>malloc(nk * sizeof(Py_ssize_t))
    cdef Py_ssize_t h, k, f, rest, ci, base, cnt
    cdef double s, lo, hi, val
    if v == NULL or stride == NULL or corner == NULL:
        free(v); free(stride); free(corner)
        raise MemoryError()
    try:
        with nogil:
            stride[d - 1] = 1
            for k in range(d - 2, -1, -1):
                stride[k] = stride[k + 1] * (m + 1)
            for ci in range(nk):
                corner[ci] = 0
                for k in range(d):
                    if (ci >> (d - 1 - k)) & 1:
                        corner[ci] += stride[k]
            for h in range(H):
                for f in range(nv):
                    rest = f
                    s = 0.0
                    for k in range(d):
                        s = s + A[h, k] * ((rest // stride[k]) / <double>m)
                        rest = rest % stride[k]
                    v[f] = s - b[h]
                cnt = 0
                for f in range(nc):
                    rest = f
                    base = 0
                    for k in range(d - 1, -1, -1):
                        base += (rest % m) * stride[k]
                        rest = rest // m
                    lo = v[base]
                    hi = lo
                    for ci in range(1, nk):
                        val = v[base + corner[ci]]
                        if val < lo:
                            lo = val
                        if val > hi:
                            hi = val
                    if lo <= 0.0 and hi >= 0.0:
                        cnt += 1
                o[h] = cnt
    finally:
        free(v); free(stride); free(corner)
    return out
