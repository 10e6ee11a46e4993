# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every function here has a behaviour-identical twin in :mod:`seqtran._purepy`;
:mod:`seqtran.kernels` picks one at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, INFINITY

cnp.import_array()


def ssim_box_mean(const unsigned char[:, :, ::1] a,
                  const unsigned char[:, :, ::1] b,
                  Py_ssize_t window, double c1, double c2):
    """Mean windowed SSIM of two binary volumes (box window, valid mode)."""
    cdef Py_ssize_t nx = a.shape[0], ny = a.shape[1], nz = a.shape[2]
    cdef Py_ssize_t x, y, z, x1, y1, z1
    cdef cnp.int64_t[:, :, ::1] pa = np.zeros((nx + 1, ny + 1, nz + 1), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] pb = np.zeros((nx + 1, ny + 1, nz + 1), dtype=np.int64)
    cdef cnp.int64_t[:, :, ::1] pab = np.zeros((nx + 1, ny + 1, nz + 1), dtype=np.int64)

    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                pa[x + 1, y + 1, z + 1] = (a[x, y, z] + pa[x, y + 1, z + 1] + pa[x + 1, y, z + 1]
                                           + pa[x + 1, y + 1, z] - pa[x, y, z + 1] - pa[x, y + 1, z]
                                           - pa[x + 1, y, z] + pa[x, y, z])
                pb[x + 1, y + 1, z + 1] = (b[x, y, z] + pb[x, y + 1, z + 1] + pb[x + 1, y, z + 1]
                                           + pb[x + 1, y + 1, z] - pb[x, y, z + 1] - pb[x, y + 1, z]
                                           - pb[x + 1, y, z] + pb[x, y, z])
                pab[x + 1, y + 1, z + 1] = (a[x, y, z] * b[x, y, z] + pab[x, y + 1, z + 1]
                                            + pab[x + 1, y, z + 1] + pab[x + 1, y + 1, z]
                                            - pab[x, y, z + 1] - pab[x, y + 1, z]
                                            - pab[x + 1, y, z] + pab[x, y, z])

    cdef cnp.int64_t n = window * window * window
    cdef double c1n = c1 * <double>(n * n)
    cdef double c2n = c2 * <double>(n * n)
    cdef cnp.int64_t sa, sb, sab
    cdef double num1, num2, den1, den2, total = 0.0
    cdef Py_ssize_t count = 0

    for x in range(nx - window + 1):
        x1 = x + window
        for y in range(ny - window + 1):
            y1 = y + window
            for z in range(nz - window + 1):
                z1 = z + window
                sa = (pa[x1, y1, z1] - pa[x, y1, z1] - pa[x1, y, z1] - pa[x1, y1, z]
                      + pa[x, y, z1] + pa[x, y1, z] + pa[x1, y, z] - pa[x, y, z])
                sb = (pb[x1, y1, z1] - pb[x, y1, z1] - pb[x1, y, z1] - pb[x1, y1, z]
                      + pb[x, y, z1] + pb[x, y1, z] + pb[x1, y, z] - pb[x, y, z])
                sab = (pab[x1, y1, z1] - pab[x, y1, z1] - pab[x1, y, z1] - pab[x1, y1, z]
                       + pab[x, y, z1] + pab[x, y1, z] + pab[x1, y, z] - pab[x, y, z])
                # binary input: sum(a*a) == sum(a)
                num1 = <double>(2 * sa * sb) + c1n
                den1 = <double>(sa * sa + sb * sb) + c1n
                num2 = <double>(2 * (n * sab - sa * sb)) + c2n
                den2 = <double>((n * sa - sa * sa) + (n * sb - sb * sb)) + c2n
                total += (num1 * num2) / (den1 * den2)
                count += 1
    return total / count


cdef inline double _lse_row(const double[:, ::1] M, const double[::1] g,
                            Py_ssize_t i, double eps) nogil:
    cdef Py_ssize_t j, m = M.shape[1]
    cdef double mx = -INFINITY, v, s = 0.0
    for j in range(m):
        v = (g[j] - M[i, j]) / eps
        if v > mx:
            mx = v
    for j in range(m):
        s += exp((g[j] - M[i, j]) / eps - mx)
    return mx + log(s)


cdef inline double _lse_col(const double[:, ::1] M, const double[::1] f,
                            Py_ssize_t j, double eps) nogil:
    cdef Py_ssize_t i, n = M.shape[0]
    cdef double mx = -INFINITY, v, s = 0.0
    for i in range(n):
        v = (f[i] - M[i, j]) / eps
        if v > mx:
            mx = v
    for i in range(n):
        s += exp((f[i] - M[i, j]) / eps - mx)
    return mx + log(s)


def sinkhorn_log(const double[:, ::1] M, const double[::1] log_a,
                 const double[::1] log_b, double eps,
                 double[::1] f, double[::1] g, Py_ssize_t max_iter, double tol):
    """Log-domain Sinkhorn sweeps updating the potentials ``f``, ``g`` in place.

    Returns ``(iterations, row_marginal_l1_error)``.
    """
    cdef Py_ssize_t n = M.shape[0], m = M.shape[1], i, j, it = 0
    cdef double err = INFINITY, row
    with nogil:
        while it < max_iter:
            for i in range(n):
                f[i] = eps * log_a[i] - eps * _lse_row(M, g, i, eps)
            for j in range(m):
                g[j] = eps * log_b[j] - eps * _lse_col(M, f, j, eps)
            it += 1
            err = 0.0
            for i in range(n):
                row = 0.0
                for j in range(m):
                    row += exp((f[i] + g[j] - M[i, j]) / eps)
                err += fabs(row - exp(log_a[i]))
            if err <= tol:
                break
    return it, err


def edge_betweenness_dense(const double[:, ::1] W):
    """Brandes edge betweenness on a dense cost matrix (``inf`` = no edge).

    Returns an ``n x n`` symmetric matrix; entry ``[u, v]`` is the sum over
    unordered node pairs of the fraction of shortest paths using edge ``u-v``.
    Equal-cost paths are ranked by how many zero-cost edges they use, so
    zero-cost cycles never count as shortest.
    """
    cdef Py_ssize_t n = W.shape[0], s, k, v, w, best, top, az, bz
    cdef double alt, c, bd
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] B = out
    cdef double[::1] dist = np.empty(n)
    cdef Py_ssize_t[::1] zc = np.empty(n, dtype=np.intp)
    cdef double[::1] sigma = np.empty(n)
    cdef double[::1] delta = np.empty(n)
    cdef unsigned char[::1] done = np.empty(n, dtype=np.uint8)
    cdef unsigned char[:, ::1] pred = np.empty((n, n), dtype=np.uint8)
    cdef Py_ssize_t[::1] order = np.empty(n, dtype=np.intp)

    for s in range(n):
        for v in range(n):
            dist[v] = INFINITY
            zc[v] = 0
            sigma[v] = 0.0
            delta[v] = 0.0
            done[v] = 0
            for w in range(n):
                pred[v, w] = 0
        dist[s] = 0.0
        sigma[s] = 1.0
        top = 0
        while True:
            best = -1
            bd = INFINITY
            bz = 0
            for v in range(n):
                if not done[v] and dist[v] < INFINITY and (
                        best < 0 or dist[v] < bd or (dist[v] == bd and zc[v] < bz)):
                    bd = dist[v]
                    bz = zc[v]
                    best = v
            if best < 0:
                break
            v = best
            done[v] = 1
            order[top] = v
            top += 1
            for w in range(n):
                if done[w] or W[v, w] == INFINITY or w == v:
                    continue
                alt = dist[v] + W[v, w]
                az = zc[v] + (1 if W[v, w] == 0.0 else 0)
                if alt < dist[w] or (alt == dist[w] and az < zc[w]):
                    dist[w] = alt
                    zc[w] = az
                    sigma[w] = sigma[v]
                    for k in range(n):
                        pred[w, k] = 0
                    pred[w, v] = 1
                elif alt == dist[w] and az == zc[w]:
                    sigma[w] += sigma[v]
                    pred[w, v] = 1
        for k in range(top - 1, -1, -1):
            w = order[k]
            for v in range(n):
                if pred[w, v]:
                    c = sigma[v] / sigma[w] * (1.0 + delta[w])
                    B[v, w] += c
                    delta[v] += c

    for v in range(n):
        for w in range(v + 1, n):
            c = 0.5 * (B[v, w] + B[w, v])
            B[v, w] = c
            B[w, v] = c
    return out
