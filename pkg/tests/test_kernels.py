"""Compiled and interpreted kernels must agree."""

import numpy as np
import pytest

from seqtran import kernels
from seqtran import _purepy

backends = kernels.available_backends()
needs_cython = pytest.mark.skipif("cython" not in backends, reason="extension not built")


@needs_cython
@pytest.mark.parametrize("shape,window", [((9, 9, 9), 3), ((8, 11, 7), 5), ((7, 7, 7), 7)])
def test_ssim_parity(rng, shape, window):
    cy = kernels.get_backend("cython")
    for _ in range(5):
        a = (rng.random(shape) < 0.4).astype(np.uint8)
        b = (rng.random(shape) < 0.6).astype(np.uint8)
        x = cy.ssim_box_mean(a, b, window, 1e-4, 9e-4)
        y = _purepy.ssim_box_mean(a, b, window, 1e-4, 9e-4)
        assert x == pytest.approx(y, abs=1e-13)


@needs_cython
def test_sinkhorn_parity(rng):
    cy = kernels.get_backend("cython")
    for _ in range(10):
        n, m = rng.integers(2, 8, size=2)
        M = np.ascontiguousarray(rng.random((n, m)))
        la = np.log(rng.dirichlet(np.ones(n)))
        lb = np.log(rng.dirichlet(np.ones(m)))
        f1, g1 = np.zeros(n), np.zeros(m)
        f2, g2 = np.zeros(n), np.zeros(m)
        it1, e1 = cy.sinkhorn_log(M, la, lb, 0.05, f1, g1, 500, 1e-10)
        it2, e2 = _purepy.sinkhorn_log(M, la, lb, 0.05, f2, g2, 500, 1e-10)
        assert it1 == it2
        np.testing.assert_allclose(f1, f2, atol=1e-9)
        np.testing.assert_allclose(g1, g2, atol=1e-9)


@needs_cython
def test_betweenness_parity(rng):
    cy = kernels.get_backend("cython")
    for _ in range(20):
        n = int(rng.integers(2, 12))
        W = np.full((n, n), np.inf)
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    W[i, j] = W[j, i] = float(rng.integers(1, 4))
        np.testing.assert_allclose(cy.edge_betweenness_dense(W),
                                   _purepy.edge_betweenness_dense(W), atol=1e-12)


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in backends
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
