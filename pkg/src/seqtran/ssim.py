"""Windowed SSIM between binary label volumes and the task-level label similarity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError


@dataclass(frozen=True)
class SsimParams:
    """Box window of ``window**3`` voxels, stride 1, no padding.

    ``C1 = (k1 * L)**2`` and ``C2 = (k2 * L)**2``; defaults follow Wang et al.
    (2004) with ``L = 1`` for binary labels.
    """

    window: int = 7
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 3 or self.window % 2 == 0:
            raise ValidationError(f"window must be an odd integer >= 3, got {self.window}")
        if not (self.k1 > 0 and self.k2 > 0 and self.dynamic_range > 0):
            raise ValidationError("k1, k2 and dynamic_range must be > 0")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


def _as_binary(v, name):
    v = np.asarray(v)
    if v.ndim != 3:
        raise ValidationError(f"{name} must be a 3-D volume")
    if not np.all((v == 0) | (v == 1)):
        raise ValidationError(f"{name} is not binary")
    return np.ascontiguousarray(v, dtype=np.uint8)


def ssim_volume(a, b, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM over all full windows of two binary volumes.

    Window statistics use population (1/n) moments. Sums are accumulated in
    integers, so the result is exactly symmetric and ``ssim_volume(a, a) == 1``.
    """
    a = _as_binary(a, "a")
    b = _as_binary(b, "b")
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch {a.shape} vs {b.shape}")
    if min(a.shape) < params.window:
        raise ValidationError(f"volume {a.shape} smaller than window {params.window}")
    return float(kernels.ssim_box_mean(a, b, int(params.window), params.c1, params.c2))


def label_similarity_R(task_i, task_j, params: SsimParams = SsimParams()) -> float:
    """Mean pairwise SSIM between the label volumes of two tasks on a common grid."""
    if task_i.sample_count == 0 or task_j.sample_count == 0:
        raise ValidationError("label_similarity_R needs non-empty tasks")
    if task_i.shape != task_j.shape:
        raise ValidationError(f"tasks not on a common grid: {task_i.shape} vs {task_j.shape}")
    values = [ssim_volume(p.label, q.label, params)
              for p in task_i.samples for q in task_j.samples]
    return math.fsum(values) / (task_i.sample_count * task_j.sample_count)
