"""Central finite-difference verification of analytic gradients."""
from __future__ import annotations

import numpy as np

from . import ops
from .tensor import Tensor


def _scalarize(out, projection):
    if out.data.ndim == 0:
        return out
    return ops.sum_all(ops.mul(out, projection))


def finite_difference_check(fn, inputs, eps=1e-5, skip=None, seed=0):
    """Largest ``|ad - fd| / max(1, |ad|, |fd|)`` over all checked coordinates.

    ``fn`` maps a list of tensors to a tensor; non-scalar outputs are reduced
    with a fixed random projection. Inputs are copied to float64. ``skip``
    may hold, per input, a boolean mask of coordinates to leave unchecked
    (or ``None``).
    """
    arrays = [np.array(a, dtype=np.float64) for a in inputs]
    skip = skip or [None] * len(arrays)
    probe = fn([Tensor(a) for a in arrays])
    projection = np.random.default_rng(seed).standard_normal(probe.shape)

    def value(arrs):
        return float(_scalarize(fn([Tensor(a) for a in arrs]), projection).data)

    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    _scalarize(fn(leaves), projection).backward()

    worst = 0.0
    for i, a in enumerate(arrays):
        ad = leaves[i].grad if leaves[i].grad is not None else np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            if skip[i] is not None and skip[i][idx]:
                continue
            orig = a[idx]
            a[idx] = orig + eps
            fp = value(arrays)
            a[idx] = orig - eps
            fm = value(arrays)
            a[idx] = orig
            fd = (fp - fm) / (2 * eps)
            err = abs(ad[idx] - fd) / max(1.0, abs(ad[idx]), abs(fd))
            worst = max(worst, err)
    return worst
