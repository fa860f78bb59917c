"""Finite-difference suite over every differentiable op, at float64."""
from __future__ import annotations

import numpy as np

from . import losses, ops
from .gradcheck import finite_difference_check

WARP_TOL = 1e-3
OP_TOL = 1e-4
KINK = 1e-3


def _away_from_zero(rng, shape):
    x = rng.uniform(-1, 1, shape)
    return np.where(np.abs(x) < 0.05, 0.05 * np.sign(x) + (x == 0) * 0.05, x)


def _warp_case(rng):
    feat = rng.standard_normal((3, 6, 5))
    off = rng.uniform(-2, 2, (2, 6, 5))
    yy, xx = np.mgrid[0:6, 0:5]
    sx, sy = xx + off[0], yy + off[1]

    def near_kink(s, hi):
        frac = np.abs(s - np.round(s))
        return (frac < KINK) | (np.abs(s) < KINK) | (np.abs(s - hi) < KINK)

    skip_off = np.stack([near_kink(sx, 4), near_kink(sy, 5)])
    return lambda t: ops.warp_with_offsets(t[0], t[1]), [feat, off], [None, skip_off]


def _cases():
    """``name -> (builder(rng) -> (fn, inputs, skip), tolerance)``."""

    def pair(shape):
        return lambda rng: [rng.standard_normal(shape), rng.standard_normal(shape)]

    def unary(fn, shape=(2, 4, 5), make=None):
        def build(rng):
            x = make(rng, shape) if make else rng.standard_normal(shape)
            return lambda t: fn(t[0]), [x], None
        return build

    def binop(fn, shape=(2, 4, 5)):
        def build(rng):
            return lambda t: fn(t[0], t[1]), pair(shape)(rng), None
        return build

    def conv(stride, pad, bias=True):
        def build(rng):
            x = rng.standard_normal((3, 7, 6))
            w = rng.standard_normal((4, 3, 3, 3))
            if bias:
                return (lambda t: ops.conv2d(t[0], t[1], t[2], stride=stride, pad=pad),
                        [x, w, rng.standard_normal(4)], None)
            return lambda t: ops.conv2d(t[0], t[1], stride=stride, pad=pad), [x, w], None
        return build

    def loss_vs_target(fn, target_fn):
        def build(rng):
            x = rng.standard_normal((1, 8, 8))
            tgt = target_fn(rng)
            return lambda t: fn(t[0], tgt), [x], None
        return build

    def masked(rng):
        x = rng.uniform(0, 1, (1, 8, 8))
        tgt = np.clip(x[0] + _away_from_zero(rng, (8, 8)) * 0.5, 0, 1)
        sup = rng.random((8, 8)) < 0.5
        return lambda t: losses.masked_l1_loss(t[0], tgt, sup)[0], [x], None

    def lap(rng):
        x = rng.standard_normal((1, 32, 32))
        tgt = rng.standard_normal((32, 32))
        return lambda t: losses.laplacian_loss(t[0], tgt), [x], None

    return {
        "add": (binop(ops.add), OP_TOL),
        "sub": (binop(ops.sub), OP_TOL),
        "mul": (binop(ops.mul), OP_TOL),
        "scale": (unary(lambda x: ops.mul(x, 2.5)), OP_TOL),
        "relu": (unary(ops.relu, make=_away_from_zero), OP_TOL),
        "sigmoid": (unary(ops.sigmoid), OP_TOL),
        "absolute": (unary(ops.absolute, make=_away_from_zero), OP_TOL),
        "sum_all": (unary(ops.sum_all), OP_TOL),
        "mean": (unary(ops.mean), OP_TOL),
        "concat_channels": (binop(lambda a, b: ops.concat_channels(a, b)), OP_TOL),
        "resize_bilinear": (unary(lambda x: ops.resize_bilinear(x, 7, 3)), OP_TOL),
        "upsample_bilinear_2x": (unary(ops.upsample_bilinear_2x), OP_TOL),
        "downsample_avg_2x": (unary(ops.downsample_avg_2x, shape=(2, 4, 6)), OP_TOL),
        "conv2d": (conv(1, 1), OP_TOL),
        "conv2d_stride2": (conv(2, 1), OP_TOL),
        "conv2d_nobias": (conv(1, 0, bias=False), OP_TOL),
        "warp_with_offsets": (_warp_case, WARP_TOL),
        "l1_loss": (loss_vs_target(losses.l1_loss, lambda r: r.standard_normal((8, 8)) + 3.0), OP_TOL),
        "masked_l1_loss": (masked, OP_TOL),
        "bce_loss": (loss_vs_target(losses.bce_loss, lambda r: r.uniform(0, 1, (8, 8))), OP_TOL),
        "weighted_ce_edge_loss": (loss_vs_target(losses.weighted_ce_edge_loss,
                                                 lambda r: (r.random((8, 8)) < 0.2).astype(float)),
                                  OP_TOL),
        "laplacian_loss": (lap, OP_TOL),
    }


CASES = _cases()


def check_op(name, seed=0):
    """Max relative gradient error of op ``name`` on a random float64 case."""
    build, _ = CASES[name]
    fn, inputs, skip = build(np.random.default_rng(seed))
    return finite_difference_check(fn, inputs, skip=skip, seed=seed)


def run_suite(names=None, seeds=(0, 1, 2)):
    """``[(name, worst_error, tolerance, ok)]`` over the requested ops."""
    names = list(CASES) if names is None else list(names)
    rows = []
    for name in names:
        if name not in CASES:
            raise KeyError(f"unknown op {name!r}")
        worst = max(check_op(name, s) for s in seeds)
        tol = CASES[name][1]
        rows.append((name, worst, tol, worst < tol))
    return rows
