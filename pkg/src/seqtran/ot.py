"""Wasserstein-1 distances between discrete distributions and the task-level
image dissimilarity built from them.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import ConvergenceError, ValidationError

log = logging.getLogger(__name__)

LP_SIZE_LIMIT = 10_000
SINKHORN_REL_EPS = 0.01
SINKHORN_MAX_ITER = 1000
WARM_START_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Weighted point set; ``support`` is ``(m, d)``, ``weights`` sums to one."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        if support.ndim == 1:
            support = support[:, None]
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if support.ndim != 2 or support.shape[0] == 0:
            raise ValidationError("support must be a non-empty (m, d) array")
        if weights.shape[0] != support.shape[0]:
            raise ValidationError("weights and support lengths differ")
        if not np.all(np.isfinite(support)):
            raise ValidationError("support has non-finite coordinates")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValidationError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, points):
        points = np.asarray(points, dtype=np.float64)
        m = points.shape[0]
        return cls(points, np.full(m, 1.0 / m))

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def __len__(self):
        return self.support.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return (np.array_equal(self.support, other.support)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def _key(self):
        return (self.support.shape, self.support.tobytes(), self.weights.tobytes())


@dataclass(frozen=True, eq=False)
class TransportPlan:
    matrix: np.ndarray
    cost: float
    iterations: int = 0


def cost_matrix(a: DiscreteDistribution, b: DiscreteDistribution) -> np.ndarray:
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.support[:, None, :] - b.support[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def wasserstein_1d(a: DiscreteDistribution, b: DiscreteDistribution) -> float:
    """Exact W1 on the line: integral of ``|F_a - F_b|``."""
    if a.dim != 1 or b.dim != 1:
        raise ValidationError("wasserstein_1d needs 1-dimensional distributions")
    xa, xb = a.support[:, 0], b.support[:, 0]
    pts = np.concatenate([xa, xb])
    order = np.argsort(pts, kind="mergesort")
    pts = pts[order]
    dw = np.concatenate([a.weights, -b.weights])[order]
    gaps = np.diff(pts)
    cdf_gap = np.cumsum(dw)[:-1]
    return float(np.sum(np.abs(cdf_gap) * gaps))


def _round_to_marginals(P, a, b):
    """Project a near-feasible plan onto the transport polytope."""
    rows = P.sum(axis=1)
    x = np.minimum(np.divide(a, rows, out=np.ones_like(a), where=rows > 0), 1.0)
    P = P * x[:, None]
    cols = P.sum(axis=0)
    y = np.minimum(np.divide(b, cols, out=np.ones_like(b), where=cols > 0), 1.0)
    P = P * y[None, :]
    ea = a - P.sum(axis=1)
    eb = b - P.sum(axis=0)
    s = ea.sum()
    if s > 0:
        P = P + np.outer(ea, eb) / s
    return P


def sinkhorn(a: DiscreteDistribution, b: DiscreteDistribution, epsilon: float,
             max_iter: int = SINKHORN_MAX_ITER, tol: float = 1e-6) -> TransportPlan:
    """Entropic OT in the log domain with epsilon scaling and a final marginal rounding.

    ``cost`` is the transport cost of the returned plan under the Euclidean
    ground metric (not the regularised objective).
    """
    if not epsilon > 0:
        raise ValidationError("epsilon must be > 0")
    M = cost_matrix(a, b)
    if len(a) == 1 or len(b) == 1:
        P = np.outer(a.weights, b.weights)
        return TransportPlan(P, float(np.sum(P * M)), 0)

    with np.errstate(divide="ignore"):
        log_a = np.log(a.weights)
        log_b = np.log(b.weights)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    M = np.ascontiguousarray(M)
    eps = max(float(M.max()), epsilon)
    total = 0
    while True:
        final = eps <= epsilon
        eps = max(eps, epsilon)
        # intermediate stages only warm-start the potentials
        stage_tol = tol if final else max(tol, WARM_START_TOL)
        it, err = kernels.sinkhorn_log(M, log_a, log_b, eps, f, g, max_iter, stage_tol)
        total += it
        if final:
            break
        eps /= 2.0
    if not err <= tol:
        raise ConvergenceError(f"sinkhorn did not converge in {max_iter} iterations", err)
    P = np.exp((f[:, None] + g[None, :] - M) / epsilon)
    P = _round_to_marginals(P, a.weights, b.weights)
    return TransportPlan(P, float(np.sum(P * M)), total)


def exact_transport_lp(a: DiscreteDistribution, b: DiscreteDistribution) -> TransportPlan:
    """Optimal coupling by linear programming (HiGHS dual simplex)."""
    n, m = len(a), len(b)
    if n * m > LP_SIZE_LIMIT:
        raise ValidationError(f"LP size {n}x{m} exceeds limit {LP_SIZE_LIMIT}")
    return _solve_lp(a, b)


def _solve_lp(a, b):
    n, m = len(a), len(b)
    M = cost_matrix(a, b)
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([a.weights, b.weights * (a.weights.sum() / b.weights.sum())])
    res = linprog(M.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    P = np.clip(res.x.reshape(n, m), 0.0, None)
    return TransportPlan(P, float(np.sum(P * M)), int(res.nit))


def default_epsilon(a, b) -> float:
    return SINKHORN_REL_EPS * float(cost_matrix(a, b).mean())


def wasserstein(a: DiscreteDistribution, b: DiscreteDistribution, solver: str = "sinkhorn",
                epsilon: float | None = None, max_iter: int = SINKHORN_MAX_ITER, tol: float = 1e-6) -> float:
    """W1 with the chosen solver; exactly symmetric in its arguments."""
    if b._key() < a._key():
        a, b = b, a
    if solver not in ("exact", "sinkhorn"):
        raise ValidationError(f"unknown solver {solver!r}")
    if a == b:
        return 0.0  # identity of indiscernibles, exactly
    if solver == "exact":
        if a.dim == 1:
            return wasserstein_1d(a, b)
        return exact_transport_lp(a, b).cost
    eps = default_epsilon(a, b) if epsilon is None else epsilon
    if eps <= 0.0:
        return 0.0  # every support point coincides
    try:
        return sinkhorn(a, b, eps, max_iter, tol).cost
    except ConvergenceError as exc:
        # near-degenerate couplings can stall Sinkhorn; the exact LP is cheap at these sizes
        log.debug("sinkhorn fallback to exact LP (%dx%d): %s", len(a), len(b), exc)
        return _solve_lp(a, b).cost


def image_similarity_H(dists_i, dists_j, solver: str = "sinkhorn", jobs: int = 1, **solver_opts) -> float:
    """Mean pairwise W1 between two lists of image distributions."""
    if not dists_i or not dists_j:
        raise ValidationError("image_similarity_H needs non-empty distribution lists")
    pairs = [(p, q) for p in dists_i for q in dists_j]

    def one(pq):
        return wasserstein(pq[0], pq[1], solver=solver, **solver_opts)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(pq) for pq in pairs]
    # fsum is order-independent, so H(i, j) == H(j, i) bit for bit
    return math.fsum(values) / (len(dists_i) * len(dists_j))
