"""Background-line supervision targets and the distance-band loss masks."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

# alpha at or above this is "unseen background" and ignored, up to full opacity
IGNORE_FROM = 0.8
OPAQUE_TOL = 1e-6

LINE_BAND = 13.0
MATTE_BAND = 3.0


class SupervisionMap(NamedTuple):
    values: np.ndarray
    valid: np.ndarray

    def stacked(self):
        """``(H, W, 2)`` array, the two-channel FLD1 layout."""
        return np.stack([self.values, self.valid], axis=-1).astype(np.float32)

    @classmethod
    def from_stacked(cls, arr):
        arr = np.asarray(arr, dtype=np.float32)
        return cls(arr[..., 0].copy(), arr[..., 1].copy())

    @classmethod
    def dense(cls, values):
        values = np.asarray(values, dtype=np.float32)
        return cls(values, np.ones_like(values))


class MaskedL1(NamedTuple):
    value: float
    empty: bool
    count: int


def background_line_gt(activation, alpha):
    """Line target: keep the activation where the background shows.

    ``alpha < 0.8`` keeps the activation, ``0.8 <= alpha < 1`` is ignored and
    fully opaque pixels (within ``OPAQUE_TOL``) are supervised towards 0.
    """
    pl = np.asarray(activation, dtype=np.float32)
    a = np.asarray(alpha, dtype=np.float32)
    if a.ndim == 3:
        a = a[..., 0]
    if pl.shape != a.shape:
        raise ValueError(f"shape mismatch: Pl{pl.shape} A{a.shape}")
    opaque = a >= 1.0 - OPAQUE_TOL
    seen = a < IGNORE_FROM
    values = np.where(seen, pl, 0.0).astype(np.float32)
    valid = (seen | opaque).astype(np.float32)
    return SupervisionMap(values, valid)


def loss_region_mask(distance, threshold):
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return (np.asarray(distance) <= threshold).astype(np.float32)


def support(target, region):
    return (np.asarray(region) > 0.5) & (np.asarray(target.valid) > 0.5)


def masked_l1(pred, target, region):
    """Mean absolute error over supervised pixels inside ``region``.

    An empty support gives ``value=0`` and ``empty=True`` rather than an error.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != np.shape(target.values) or pred.shape != np.shape(region):
        raise ValueError("pred, target and region must share a shape")
    sel = support(target, region)
    n = int(sel.sum())
    if n == 0:
        return MaskedL1(0.0, True, 0)
    err = np.abs(pred - np.asarray(target.values, dtype=np.float64))[sel]
    return MaskedL1(float(err.mean()), False, n)
