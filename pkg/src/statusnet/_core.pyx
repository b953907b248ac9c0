# cython: language_level=3
"""Compiled kernels: triangle listing and log-space LBP sweeps.

Drop-in replacements for ``statusnet._core_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, isfinite

cnp.import_array()

ctypedef cnp.int64_t i64


def list_triangles(const i64[::1] indptr, const i64[::1] indices):
    """Closed triangles as an ``(C, 3)`` int64 array, rows ``u < v < w``, sorted."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t count = _triangle_pass(indptr, indices, n, False, None)
    out = np.empty((count, 3), dtype=np.int64)
    if count:
        _triangle_pass(indptr, indices, n, True, out)
    return out


cdef Py_ssize_t _triangle_pass(const i64[::1] indptr, const i64[::1] indices,
                               Py_ssize_t n, bint fill, object out_obj):
    cdef i64[:, ::1] out
    cdef Py_ssize_t u, v, ia, ib, ea, eb, p, count = 0
    cdef i64 x, y
    if fill:
        out = out_obj
    for u in range(n):
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v <= u:
                continue
            # intersect N(u) and N(v) above v
            ia = indptr[u]
            ea = indptr[u + 1]
            ib = indptr[v]
            eb = indptr[v + 1]
            while ia < ea and indices[ia] <= v:
                ia += 1
            while ib < eb and indices[ib] <= v:
                ib += 1
            while ia < ea and ib < eb:
                x = indices[ia]
                y = indices[ib]
                if x == y:
                    if fill:
                        out[count, 0] = u
                        out[count, 1] = v
                        out[count, 2] = x
                    count += 1
                    ia += 1
                    ib += 1
                elif x < y:
                    ia += 1
                else:
                    ib += 1
    return count


cdef inline double _lse4(double a, double b, double c, double d) noexcept nogil:
    cdef double m = a
    if b > m:
        m = b
    if c > m:
        m = c
    if d > m:
        m = d
    return m + log(exp(a - m) + exp(b - m) + exp(c - m) + exp(d - m))


cdef inline double _lse2(double a, double b) noexcept nogil:
    cdef double m = a if a > b else b
    return m + log(exp(a - m) + exp(b - m))


cdef inline bint _fast_update(const double* ep, double mu[3][2], double nw[3][2]) noexcept nogil:
    # probability-domain contraction; returns False on underflow so the
    # caller can redo the update with log-sum-exp
    cdef double e[3][2]
    cdef double s
    cdef int j, a
    for j in range(3):
        s = mu[j][0] if mu[j][0] > mu[j][1] else mu[j][1]
        e[j][0] = exp(mu[j][0] - s)
        e[j][1] = exp(mu[j][1] - s)
    for a in range(2):
        nw[0][a] = (ep[(a << 2) | 0] * e[1][0] * e[2][0] + ep[(a << 2) | 1] * e[1][0] * e[2][1]
                    + ep[(a << 2) | 2] * e[1][1] * e[2][0] + ep[(a << 2) | 3] * e[1][1] * e[2][1])
        nw[1][a] = (ep[(a << 1) | 0] * e[0][0] * e[2][0] + ep[(a << 1) | 1] * e[0][0] * e[2][1]
                    + ep[4 | (a << 1) | 0] * e[0][1] * e[2][0] + ep[4 | (a << 1) | 1] * e[0][1] * e[2][1])
        nw[2][a] = (ep[a] * e[0][0] * e[1][0] + ep[2 | a] * e[0][0] * e[1][1]
                    + ep[4 | a] * e[0][1] * e[1][0] + ep[6 | a] * e[0][1] * e[1][1])
    for j in range(3):
        if not (nw[j][0] > 1e-280 and nw[j][1] > 1e-280):
            return False
    for j in range(3):
        nw[j][0] = log(nw[j][0])
        nw[j][1] = log(nw[j][1])
    return True


def lbp_iterate(const i64[:, ::1] tri, const double[:, ::1] unary,
                const double[::1] logpot, double[:, :, ::1] msgs,
                int max_iters, double damping, double tol):
    """Run synchronous damped sum-product sweeps in log space.

    Same contract as ``statusnet._core_py.lbp_iterate``. Releases the GIL.
    """
    cdef Py_ssize_t n = unary.shape[0]
    cdef Py_ssize_t n_tri = tri.shape[0]
    cdef Py_ssize_t c, j, v, a
    cdef int it = 0
    cdef double residual = 0.0
    cdef double d, z, r
    cdef double mu[3][2]
    cdef double nw[3][2]
    cdef Py_ssize_t bad = -1
    if n_tri == 0:
        return 1, 0.0, -1
    total_np = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] total = total_np
    cdef double p[8]
    cdef double ep[8]
    cdef double pmax = logpot[0]
    for a in range(8):
        p[a] = logpot[a]
        if p[a] > pmax:
            pmax = p[a]
    for a in range(8):
        ep[a] = exp(p[a] - pmax)
    with nogil:
        while it < max_iters:
            it += 1
            for v in range(n):
                total[v, 0] = unary[v, 0]
                total[v, 1] = unary[v, 1]
            for c in range(n_tri):
                for j in range(3):
                    total[tri[c, j], 0] += msgs[c, j, 0]
                    total[tri[c, j], 1] += msgs[c, j, 1]
            residual = 0.0
            for c in range(n_tri):
                for j in range(3):
                    mu[j][0] = total[tri[c, j], 0] - msgs[c, j, 0]
                    mu[j][1] = total[tri[c, j], 1] - msgs[c, j, 1]
                if not _fast_update(ep, mu, nw):
                    for a in range(2):
                        # index = (y0 << 2) | (y1 << 1) | y2
                        nw[0][a] = _lse4(p[(a << 2) | 0] + mu[1][0] + mu[2][0],
                                         p[(a << 2) | 1] + mu[1][0] + mu[2][1],
                                         p[(a << 2) | 2] + mu[1][1] + mu[2][0],
                                         p[(a << 2) | 3] + mu[1][1] + mu[2][1])
                        nw[1][a] = _lse4(p[(0 << 2) | (a << 1) | 0] + mu[0][0] + mu[2][0],
                                         p[(0 << 2) | (a << 1) | 1] + mu[0][0] + mu[2][1],
                                         p[(1 << 2) | (a << 1) | 0] + mu[0][1] + mu[2][0],
                                         p[(1 << 2) | (a << 1) | 1] + mu[0][1] + mu[2][1])
                        nw[2][a] = _lse4(p[(0 << 2) | (0 << 1) | a] + mu[0][0] + mu[1][0],
                                         p[(0 << 2) | (1 << 1) | a] + mu[0][0] + mu[1][1],
                                         p[(1 << 2) | (0 << 1) | a] + mu[0][1] + mu[1][0],
                                         p[(1 << 2) | (1 << 1) | a] + mu[0][1] + mu[1][1])
                for j in range(3):
                    z = _lse2(nw[j][0], nw[j][1])
                    nw[j][0] -= z
                    nw[j][1] -= z
                    d = fabs(nw[j][0] - msgs[c, j, 0])
                    r = fabs(nw[j][1] - msgs[c, j, 1])
                    if not (isfinite(d) and isfinite(r)):
                        bad = c
                        break
                    if d > residual:
                        residual = d
                    if r > residual:
                        residual = r
                    if damping > 0.0:
                        nw[j][0] = damping * msgs[c, j, 0] + (1.0 - damping) * nw[j][0]
                        nw[j][1] = damping * msgs[c, j, 1] + (1.0 - damping) * nw[j][1]
                        z = _lse2(nw[j][0], nw[j][1])
                        nw[j][0] -= z
                        nw[j][1] -= z
                if bad >= 0:
                    break
                for j in range(3):
                    msgs[c, j, 0] = nw[j][0]
                    msgs[c, j, 1] = nw[j][1]
            if bad >= 0:
                break
            if residual < tol:
                break
    if bad >= 0:
        return it, float("nan"), bad
    return it, residual, -1
