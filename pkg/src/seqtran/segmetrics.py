"""Voxel overlap metrics for binary segmentations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pred, gt) -> Confusion:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValidationError(f"shape mismatch {pred.shape} vs {gt.shape}")
    for name, v in (("pred", pred), ("gt", gt)):
        if not np.all((v == 0) | (v == 1)):
            raise ValidationError(f"{name} is not binary")
    p = pred.astype(bool)
    g = gt.astype(bool)
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return Confusion(tp, fp, fn, p.size - tp - fp - fn)


def dice(c: Confusion) -> float:
    """2TP / (2TP + FP + FN)."""
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        raise ValidationError("empty union: dice undefined")
    return 2 * c.tp / denom


def iou(c: Confusion) -> float:
    """TP / (TP + FP + FN)."""
    denom = c.tp + c.fp + c.fn
    if denom == 0:
        raise ValidationError("empty union: iou undefined")
    return c.tp / denom
