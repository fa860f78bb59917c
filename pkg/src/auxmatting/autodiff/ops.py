"""Differentiable operations on ``(C, H, W)`` tensors."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..imgcore import interp_matrix
from .tensor import Tensor, as_tensor


def _same_shape(a, b, name):
    if a.shape != b.shape:
        raise ValueError(f"{name}: shape mismatch {a.shape} vs {b.shape}")


def add(a, b):
    b = as_tensor(b, like=a)
    _same_shape(a, b, "add")
    return Tensor(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a, b):
    b = as_tensor(b, like=a)
    _same_shape(a, b, "sub")
    return Tensor(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a, b):
    """Elementwise product with a tensor, a same-shape array or a scalar."""
    if isinstance(b, Tensor):
        _same_shape(a, b, "mul")
        return Tensor(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), "mul")
    c = np.asarray(b, dtype=a.dtype)
    return Tensor(a.data * c, (a,), lambda g: (g * c,), "scale")


def relu(x):
    on = x.data > 0
    return Tensor(np.where(on, x.data, 0).astype(x.dtype), (x,), lambda g: (g * on,), "relu")


def sigmoid(x):
    y = (0.5 * (1.0 + np.tanh(0.5 * x.data))).astype(x.dtype)
    return Tensor(y, (x,), lambda g: (g * y * (1 - y),), "sigmoid")


def absolute(x):
    s = np.sign(x.data)
    return Tensor(np.abs(x.data), (x,), lambda g: (g * s,), "abs")


def sum_all(x):
    return Tensor(x.data.sum(), (x,), lambda g: (np.broadcast_to(g, x.shape),), "sum")


def mean(x):
    n = x.data.size
    return Tensor(x.data.mean(), (x,), lambda g: (np.broadcast_to(g / n, x.shape),), "mean")


def concat_channels(*xs):
    sizes = [x.shape[0] for x in xs]
    cuts = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, cuts, axis=0))

    return Tensor(np.concatenate([x.data for x in xs], axis=0), xs, backward, "concat")


def linear2d(x, rows, cols, op="linear2d"):
    """Per-channel ``rows @ x[c] @ cols.T`` for fixed matrices."""
    rows = np.asarray(rows, dtype=x.dtype)
    cols = np.asarray(cols, dtype=x.dtype)
    y = rows @ x.data @ cols.T

    def backward(g):
        return (rows.T @ g @ cols,)

    return Tensor(y, (x,), backward, op)


def resize_bilinear(x, h, w):
    """Bilinear resize to ``(h, w)``, half-pixel convention as in imgcore."""
    _, hi, wi = x.shape
    return linear2d(x, interp_matrix(hi, h), interp_matrix(wi, w), "resize")


def upsample_bilinear_2x(x):
    _, h, w = x.shape
    return linear2d(x, interp_matrix(h, 2 * h), interp_matrix(w, 2 * w), "upsample2x")


def _avg_matrix(n):
    if n % 2:
        raise ValueError("downsample_avg_2x needs even sides")
    m = np.zeros((n // 2, n))
    idx = np.arange(n // 2)
    m[idx, 2 * idx] = 0.5
    m[idx, 2 * idx + 1] = 0.5
    return m


def downsample_avg_2x(x):
    _, h, w = x.shape
    return linear2d(x, _avg_matrix(h), _avg_matrix(w), "downsample2x")


def conv2d(x, weight, bias=None, stride=1, pad=0):
    """Cross-correlation of ``x`` ``(Cin, H, W)`` with ``weight`` ``(Cout, Cin, k, k)``."""
    x, weight = as_tensor(x), as_tensor(weight)
    bias = None if bias is None else as_tensor(bias)
    cin, h, w = x.shape
    cout, cin_w, kh, kw = weight.shape
    if cin != cin_w:
        raise ValueError(f"conv2d: input has {cin} channels, weight expects {cin_w}")
    if stride < 1 or pad < 0:
        raise ValueError("conv2d: stride >= 1 and pad >= 0 required")
    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    ho, wo = win.shape[1], win.shape[2]
    cols = win.transpose(0, 3, 4, 1, 2).reshape(cin * kh * kw, ho * wo)
    wmat = weight.data.reshape(cout, -1)
    out = (wmat @ cols).reshape(cout, ho, wo)
    parents = (x, weight)
    if bias is not None:
        out = out + bias.data[:, None, None]
        parents = parents + (bias,)

    def backward(g):
        g2 = g.reshape(cout, -1)
        gw = (g2 @ cols.T).reshape(weight.shape)
        gx = None
        if x.requires_grad:
            gcols = (wmat.T @ g2).reshape(cin, kh, kw, ho, wo)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, i:i + stride * ho:stride, j:j + stride * wo:stride] += gcols[:, i, j]
            gx = gxp[:, pad:pad + h, pad:pad + w]
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=(1, 2))

    return Tensor(out, parents, backward, "conv2d")


def _bilinear_taps(offsets, h, w):
    """Neighbor indices, fractions and clamp masks for sampling at p + offset."""
    yy, xx = np.mgrid[0:h, 0:w]
    sx = xx + offsets[0]
    sy = yy + offsets[1]
    # clamped coordinates pass no gradient to the offsets
    live_x = (sx > 0) & (sx < w - 1)
    live_y = (sy > 0) & (sy < h - 1)
    sx = np.clip(sx, 0, w - 1)
    sy = np.clip(sy, 0, h - 1)
    x0 = np.clip(np.floor(sx).astype(np.int64), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(sy).astype(np.int64), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0).astype(offsets.dtype)
    fy = (sy - y0).astype(offsets.dtype)
    return x0, x1, y0, y1, fx, fy, live_x, live_y


def warp_with_offsets(feat, offsets):
    """Bilinearly sample ``feat`` at ``p + offsets(p)`` for every pixel ``p``.

    ``offsets[0]`` is the x shift and ``offsets[1]`` the y shift, in pixels.
    Sample positions are clamped to the feature map (border replicate).
    Gradients flow to both the features and the offsets.
    """
    c, h, w = feat.shape
    if offsets.shape != (2, h, w):
        raise ValueError(f"warp_with_offsets: offsets {offsets.shape} vs features {feat.shape}")
    x0, x1, y0, y1, fx, fy, live_x, live_y = _bilinear_taps(offsets.data, h, w)
    m = feat.data
    v00, v01 = m[:, y0, x0], m[:, y0, x1]
    v10, v11 = m[:, y1, x0], m[:, y1, x1]
    w00 = (1 - fy) * (1 - fx)
    w01 = (1 - fy) * fx
    w10 = fy * (1 - fx)
    w11 = fy * fx
    out = w00 * v00 + w01 * v01 + w10 * v10 + w11 * v11

    def backward(g):
        gfeat = None
        if feat.requires_grad:
            gfeat = np.zeros((c, h * w), dtype=m.dtype)
            for yi, xi, wt in ((y0, x0, w00), (y0, x1, w01), (y1, x0, w10), (y1, x1, w11)):
                idx = np.broadcast_to((yi * w + xi).ravel(), (c, h * w))
                np.add.at(gfeat, (np.arange(c)[:, None], idx), (g * wt).reshape(c, -1))
            gfeat = gfeat.reshape(c, h, w)
        dx = (1 - fy) * (v01 - v00) + fy * (v11 - v10)
        dy = (1 - fx) * (v10 - v00) + fx * (v11 - v01)
        goff = np.stack([(g * dx).sum(axis=0) * live_x, (g * dy).sum(axis=0) * live_y])
        return gfeat, goff

    return Tensor(out.astype(m.dtype), (feat, offsets), backward, "warp_with_offsets")
