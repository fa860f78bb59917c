"""Scalar training losses built on the autodiff ops."""
from __future__ import annotations

import numpy as np

from ..imgcore import interp_matrix
from . import ops
from .tensor import Tensor

_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _target_array(target, like):
    t = target.data if isinstance(target, Tensor) else np.asarray(target)
    return np.asarray(t, dtype=like.dtype).reshape(like.shape)


def l1_loss(pred, target):
    return ops.mean(ops.absolute(ops.sub(pred, _target_array(target, pred))))


def masked_l1_loss(pred, target, support):
    """Mean ``|pred - target|`` over ``support``; ``(loss, empty)``.

    An empty support yields a constant zero loss.
    """
    sel = np.asarray(support, dtype=pred.dtype).reshape(pred.shape)
    n = float(sel.sum())
    if n == 0:
        return Tensor(np.zeros((), dtype=pred.dtype)), True
    diff = ops.absolute(ops.sub(pred, _target_array(target, pred)))
    return ops.mul(ops.sum_all(ops.mul(diff, sel)), 1.0 / n), False


def _weighted_bce(logits, target, weight, op):
    x = logits.data
    t = _target_array(target, logits)
    wgt = np.ones_like(x) if weight is None else np.asarray(weight, dtype=x.dtype).reshape(x.shape)
    n = x.size
    # log(1 + e^x) - x t, written to stay finite for large |x|
    ce = np.maximum(x, 0) - x * t + np.log1p(np.exp(-np.abs(x)))
    loss = (wgt * ce).sum() / n

    def backward(g):
        sig = 0.5 * (1.0 + np.tanh(0.5 * x))
        return (g * wgt * (sig - t) / n,)

    return Tensor(np.asarray(loss, dtype=x.dtype), (logits,), backward, op)


def bce_loss(logits, target):
    """Mean sigmoid cross-entropy on logits."""
    return _weighted_bce(logits, target, None, "bce")


def edge_class_weights(edge_target):
    """Per-pixel weights: positives get N_neg/N, negatives N_pos/N."""
    t = np.asarray(edge_target, dtype=np.float64) > 0.5
    n = t.size
    n_pos = float(t.sum())
    w_pos = (n - n_pos) / n
    w_neg = n_pos / n
    return np.where(t, w_pos, w_neg)


def weighted_ce_edge_loss(logits, edge_target):
    """Class-balanced binary cross-entropy for sparse edge maps."""
    t = _target_array(edge_target, logits)
    return _weighted_bce(logits, t, edge_class_weights(t), "weighted_ce")


def _blur_matrix(n):
    m = np.zeros((n, n))
    for k, wk in zip(range(-2, 3), _BINOMIAL5):
        m[np.arange(n), np.clip(np.arange(n) + k, 0, n - 1)] += wk
    return m


def _pyramid_ops(n):
    """Matrices mapping one level to the next (blur + decimate) and back up."""
    down = _blur_matrix(n)[::2]
    up = interp_matrix(down.shape[0], n)
    return down, up


def laplacian_pyramid(x, levels=5):
    """Band-pass levels ``G_l - up(G_{l+1})`` for ``l < levels``."""
    bands = []
    g = x
    for _ in range(levels):
        _, h, w = g.shape
        dy, uy = _pyramid_ops(h)
        dx, ux = _pyramid_ops(w)
        nxt = ops.linear2d(g, dy, dx, "pyr_down")
        bands.append(ops.sub(g, ops.linear2d(nxt, uy, ux, "pyr_up")))
        g = nxt
    return bands


def laplacian_loss(pred, target, levels=5):
    """``sum_l 2^l * L1`` over Laplacian-pyramid bands of prediction and target."""
    diff = ops.sub(pred, _target_array(target, pred))
    total = None
    for lvl, band in enumerate(laplacian_pyramid(diff, levels)):
        term = ops.mul(ops.mean(ops.absolute(band)), float(2 ** lvl))
        total = term if total is None else ops.add(total, term)
    return total
