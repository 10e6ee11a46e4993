"""PCA reduction of image volumes to low-dimensional point clouds.

Each slice along the chosen axis (default: axial, ``z``) is one feature
vector. A single PCA basis is fit on the pooled slices of a task pair, and
every image becomes a uniform empirical distribution over its projected
slices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ot import DiscreteDistribution

DEFAULT_DIM = 16
SLICE_AXIS = 2


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (d, F), orthonormal rows
    explained_variance: np.ndarray
    total_variance: float

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.explained_variance / self.total_variance

    def transform(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (points - self.mean) @ self.components.T


def _fix_signs(components):
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def _complete_basis(vectors, n_total, dim):
    """Extend orthonormal rows ``vectors`` to ``n_total`` rows by Gram-Schmidt on unit vectors."""
    basis = list(vectors)
    for k in range(dim):
        if len(basis) == n_total:
            break
        e = np.zeros(dim)
        e[k] = 1.0
        for b in basis:
            e -= (b @ e) * b
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            basis.append(e / norm)
    return np.array(basis).reshape(n_total, dim)


def fit_pca(points, d: int) -> PcaModel:
    """Fit the top-``d`` principal directions of ``points`` (``n x F``)."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("points must be a 2-D array (n, F)")
    n, F = X.shape
    if n < 2:
        raise ValidationError("fit_pca needs at least 2 points")
    if not 1 <= d <= min(F, n - 1):
        raise ValidationError(f"d={d} out of range [1, {min(F, n - 1)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    total = float(np.einsum("ij,ij->", Xc, Xc) / (n - 1))
    if total <= 0.0:
        raise ValidationError("degenerate covariance")

    if F <= n:
        evals, evecs = np.linalg.eigh(Xc.T @ Xc / (n - 1))
        order = np.argsort(evals)[::-1][:d]
        evals = np.clip(evals[order], 0.0, None)
        comps = evecs[:, order].T
    else:
        gram = Xc @ Xc.T / (n - 1)
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1][:d]
        evals = np.clip(evals[order], 0.0, None)
        keep = evals > evals[0] * 1e-12
        u = evecs[:, order[keep]]
        comps = (Xc.T @ u / np.sqrt(evals[keep] * (n - 1))).T
        if not keep.all():
            comps = _complete_basis(comps, d, F)
    comps = _fix_signs(np.ascontiguousarray(comps))
    return PcaModel(mean, comps, evals, total)


def slice_features(volume: np.ndarray, axis: int = SLICE_AXIS) -> np.ndarray:
    """Flatten each slice along ``axis`` into one row."""
    v = np.moveaxis(np.asarray(volume, dtype=np.float64), axis, 0)
    return v.reshape(v.shape[0], -1)


def _uniform(points):
    m = points.shape[0]
    return DiscreteDistribution(points, np.full(m, 1.0 / m))


def reduce_pair(task_i, task_j, d: int = DEFAULT_DIM, axis: int = SLICE_AXIS):
    """Project every image of both tasks with one PCA basis fit on their pooled slices.

    Returns two lists of :class:`DiscreteDistribution`, one per image.
    """
    if d < 1:
        raise ValidationError("d must be >= 1")
    if task_i.shape != task_j.shape:
        raise ValidationError(
            f"tasks not on a common grid: {task_i.shape} vs {task_j.shape}")
    feats_i = [slice_features(s.image, axis) for s in task_i.samples]
    feats_j = [slice_features(s.image, axis) for s in task_j.samples]
    pooled = np.vstack(feats_i + feats_j)
    n, F = pooled.shape
    if n < 2:
        raise ValidationError("fewer than 2 pooled feature vectors")

    centered = pooled - pooled.mean(axis=0)
    if not np.any(centered):
        # all slices identical: every distribution collapses onto one point
        return ([_uniform(np.zeros((f.shape[0], 1))) for f in feats_i],
                [_uniform(np.zeros((f.shape[0], 1))) for f in feats_j])

    d_eff = min(d, F, n - 1)
    model = fit_pca(pooled, d_eff)
    rank = int(np.sum(model.explained_variance > model.explained_variance[0] * 1e-12))
    if rank < model.n_components:
        model = PcaModel(model.mean, model.components[:rank],
                         model.explained_variance[:rank], model.total_variance)
    return ([_uniform(model.transform(f)) for f in feats_i],
            [_uniform(model.transform(f)) for f in feats_j])
