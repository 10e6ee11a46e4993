from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqtran.errors import ValidationError
from seqtran.segmetrics import Confusion, confusion, dice, iou


def test_all_ones():
    v = np.ones((2, 2, 2), dtype=np.uint8)
    assert confusion(v, v) == Confusion(8, 0, 0, 0)


def test_complement(rng):
    gt = (rng.random((4, 4, 4)) < 0.5).astype(np.uint8)
    c = confusion(1 - gt, gt)
    assert c.tp == 0 and c.tn == 0 and c.total == 64


def test_loop_oracle(rng):
    for _ in range(10):
        pred = (rng.random((4, 4, 4)) < 0.5).astype(np.uint8)
        gt = (rng.random((4, 4, 4)) < 0.5).astype(np.uint8)
        counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
        for x in range(4):
            for y in range(4):
                for z in range(4):
                    p, g = pred[x, y, z], gt[x, y, z]
                    key = ("t" if p == g else "f") + ("p" if p else "n")
                    counts[key] += 1
        assert confusion(pred, gt) == Confusion(**counts)


def test_errors():
    with pytest.raises(ValidationError, match="shape mismatch"):
        confusion(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ValidationError, match="not binary"):
        confusion(np.full((2, 2), 2), np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        Confusion(-1, 0, 0, 0)
    with pytest.raises(ValidationError, match="empty union"):
        dice(Confusion(0, 0, 0, 5))
    with pytest.raises(ValidationError, match="empty union"):
        iou(Confusion(0, 0, 0, 5))


def test_spot_values():
    assert dice(Confusion(1, 0, 0, 0)) == 1.0 and iou(Confusion(1, 0, 0, 0)) == 1.0
    assert dice(Confusion(2, 1, 1, 0)) == 2 / 3
    assert iou(Confusion(2, 1, 1, 0)) == 0.5


confusions = st.builds(Confusion, st.integers(0, 10**6), st.integers(0, 10**6),
                       st.integers(0, 10**6), st.integers(0, 10**6)).filter(
    lambda c: c.tp + c.fp + c.fn > 0)


@given(confusions)
def test_identity_and_order(c):
    d, j = dice(c), iou(c)
    assert d == pytest.approx(2 * j / (1 + j), abs=1e-12)
    assert 0.0 <= j <= d <= 1.0
    exact_equal = Fraction(2 * c.tp, 2 * c.tp + c.fp + c.fn) == Fraction(c.tp, c.tp + c.fp + c.fn)
    assert exact_equal == (d in (0.0, 1.0))


@given(confusions)
def test_swap_symmetry(c):
    swapped = Confusion(c.tp, c.fn, c.fp, c.tn)
    assert dice(c) == dice(swapped) and iou(c) == iou(swapped)
