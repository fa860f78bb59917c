"""Sample synthesis: compositing, guidance masks and their perturbation."""
from __future__ import annotations

import numpy as np

from .imgcore import dilate, erode


def composite(fg, bg, alpha):
    """Blend ``alpha * fg + (1 - alpha) * bg`` per pixel and channel."""
    fg = np.asarray(fg, dtype=np.float32)
    bg = np.asarray(bg, dtype=np.float32)
    alpha = np.asarray(alpha, dtype=np.float32)
    if alpha.ndim == 3:
        if alpha.shape[2] != 1:
            raise ValueError("alpha must be single-channel")
        alpha = alpha[..., 0]
    if fg.shape != bg.shape or fg.shape[:2] != alpha.shape:
        raise ValueError(f"shape mismatch: F{fg.shape} B{bg.shape} A{alpha.shape}")
    a = alpha[..., None] if fg.ndim == 3 else alpha
    return (a * fg + (1.0 - a) * bg).astype(np.float32)


def make_guidance(alpha, threshold=0.95, erode_k=21):
    """Binarize ``alpha >= threshold`` then erode with an ``erode_k`` window."""
    binary = (np.asarray(alpha) >= threshold).astype(np.float32)
    return erode(binary, erode_k)


def perturb_guidance(mask, distance=None, seed=0, p_line=0.2, width_range=(2, 8),
                     p_dilate=0.5, kernel_range=(3, 15)):
    """Randomly corrupt a binary guidance mask.

    A dilation or erosion with an odd kernel drawn from ``kernel_range`` is
    always applied. When a distance field is given, with probability
    ``p_line`` every pixel within ``w / 2`` of a line is switched on, with the
    line width ``w`` drawn from ``width_range`` (inclusive).
    """
    mask = np.asarray(mask, dtype=np.float32)
    if distance is not None and np.shape(distance) != mask.shape:
        raise ValueError("distance field and mask differ in shape")
    rng = np.random.default_rng(seed)
    do_dilate = rng.random() < p_dilate
    sides = np.arange(kernel_range[0], kernel_range[1] + 1)
    sides = sides[sides % 2 == 1]
    k = int(rng.choice(sides))
    out = dilate(mask, k) if do_dilate else erode(mask, k)
    draw_line = rng.random() < p_line
    w = int(rng.integers(width_range[0], width_range[1] + 1))
    if distance is not None and draw_line:
        out = np.where(np.asarray(distance) <= w / 2.0, 1.0, out).astype(np.float32)
    return out


def edge_from_mask(seg, radius=2):
    """Pixels whose ``(2r+1)``-square neighborhood holds both labels."""
    k = 2 * radius + 1
    seg = np.asarray(seg, dtype=np.float32)
    return (dilate(seg, k) != erode(seg, k)).astype(np.float32)
