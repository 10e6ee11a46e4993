"""Interpreted twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same arithmetic; used when the extension is not built or
when ``SEQTRAN_PURE_PYTHON=1``.
"""

import math

import numpy as np
from scipy.special import logsumexp


def _prefix3(v):
    p = np.zeros(tuple(s + 1 for s in v.shape), dtype=np.int64)
    p[1:, 1:, 1:] = v.astype(np.int64).cumsum(0).cumsum(1).cumsum(2)
    return p


def _window3(p, w):
    return (p[w:, w:, w:] - p[:-w, w:, w:] - p[w:, :-w, w:] - p[w:, w:, :-w]
            + p[:-w, :-w, w:] + p[:-w, w:, :-w] + p[w:, :-w, :-w] - p[:-w, :-w, :-w])


def ssim_box_mean(a, b, window, c1, c2):
    """Mean windowed SSIM of two binary volumes (box window, valid mode)."""
    w = int(window)
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    sa = _window3(_prefix3(a), w)
    sb = _window3(_prefix3(b), w)
    sab = _window3(_prefix3(a * b), w)
    n = w ** 3
    c1n = c1 * float(n * n)
    c2n = c2 * float(n * n)
    num1 = (2 * sa * sb).astype(np.float64) + c1n
    den1 = (sa * sa + sb * sb).astype(np.float64) + c1n
    num2 = (2 * (n * sab - sa * sb)).astype(np.float64) + c2n
    den2 = ((n * sa - sa * sa) + (n * sb - sb * sb)).astype(np.float64) + c2n
    return float(np.mean((num1 * num2) / (den1 * den2)))


def sinkhorn_log(M, log_a, log_b, eps, f, g, max_iter, tol):
    """Log-domain Sinkhorn sweeps updating ``f`` and ``g`` in place."""
    a = np.exp(log_a)
    err = math.inf
    it = 0
    while it < max_iter:
        f[:] = eps * log_a - eps * logsumexp((g[None, :] - M) / eps, axis=1)
        g[:] = eps * log_b - eps * logsumexp((f[:, None] - M) / eps, axis=0)
        it += 1
        rows = np.exp((f[:, None] + g[None, :] - M) / eps).sum(axis=1)
        err = float(np.abs(rows - a).sum())
        if err <= tol:
            break
    return it, err


def edge_betweenness_dense(W):
    """Brandes edge betweenness on a dense cost matrix (``inf`` = no edge).

    Equal-cost paths are ranked by their number of zero-cost edges.
    """
    W = np.asarray(W, dtype=np.float64)
    n = W.shape[0]
    cost = W.tolist()
    B = [[0.0] * n for _ in range(n)]
    inf = math.inf
    for s in range(n):
        dist = [inf] * n
        zc = [0] * n
        sigma = [0.0] * n
        delta = [0.0] * n
        done = [False] * n
        pred = [[] for _ in range(n)]
        dist[s] = 0.0
        sigma[s] = 1.0
        order = []
        while True:
            best, key = -1, None
            for v in range(n):
                if not done[v] and dist[v] < inf and (key is None or (dist[v], zc[v]) < key):
                    best, key = v, (dist[v], zc[v])
            if best < 0:
                break
            v = best
            done[v] = True
            order.append(v)
            row = cost[v]
            for w in range(n):
                if done[w] or w == v or row[w] == inf:
                    continue
                alt = dist[v] + row[w]
                az = zc[v] + (row[w] == 0.0)
                if alt < dist[w] or (alt == dist[w] and az < zc[w]):
                    dist[w], zc[w] = alt, az
                    sigma[w] = sigma[v]
                    pred[w] = [v]
                elif alt == dist[w] and az == zc[w]:
                    sigma[w] += sigma[v]
                    pred[w].append(v)
        for w in reversed(order):
            for v in sorted(pred[w]):
                c = sigma[v] / sigma[w] * (1.0 + delta[w])
                B[v][w] += c
                delta[v] += c
    out = np.array(B, dtype=np.float64).reshape(n, n)
    return 0.5 * (out + out.T)
