"""Procedural training samples for the three supervision regimes."""
from __future__ import annotations

import colorsys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..compositor import composite, edge_from_mask, make_guidance, perturb_guidance
from ..imgcore import add_gaussian_noise, gaussian_blur, resize_bilinear, to_gray
from ..linedet import LineSegment, homography_adaptation, line_activation, render_segments
from ..pseudogt import SupervisionMap, background_line_gt

MATTING, SEG, BGLINE = "matting", "seg", "bgline"
TASKS = (MATTING, SEG, BGLINE)

ADAPTATION_VIEWS = 5


@dataclass
class SampleBundle:
    image: np.ndarray
    guidance: np.ndarray
    task: str
    alpha: Optional[np.ndarray] = None
    seg: Optional[np.ndarray] = None
    edge: Optional[np.ndarray] = None
    bl: Optional[SupervisionMap] = None
    distance: Optional[np.ndarray] = None

    def validate(self):
        h, w = self.image.shape[:2]
        if self.image.shape != (h, w, 3) or self.guidance.shape != (h, w):
            raise ValueError("image must be (H, W, 3) and guidance (H, W)")
        if not np.isin(self.guidance, (0.0, 1.0)).all():
            raise ValueError("guidance is not binary")
        required = {MATTING: ("alpha",), SEG: ("seg", "edge"), BGLINE: ("alpha", "bl", "distance")}
        if self.task not in required:
            raise ValueError(f"unknown task {self.task!r}")
        for name in required[self.task]:
            value = getattr(self, name)
            if value is None:
                raise ValueError(f"{self.task} sample lacks {name}")
            arr = value.values if isinstance(value, SupervisionMap) else value
            if np.shape(arr) != (h, w):
                raise ValueError(f"{name} has shape {np.shape(arr)}, expected {(h, w)}")
        if self.alpha is not None and not ((self.alpha >= 0) & (self.alpha <= 1)).all():
            raise ValueError("alpha outside [0, 1]")
        return self


def sample_seed(seed, index):
    """Independent 63-bit seed for item ``index`` of a stream seeded by ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(2, np.uint64)[0] >> np.uint64(1))


def guidance_kernel(size):
    """Erosion window for guidance masks, scaled from 21 px at 512 px crops."""
    return max(3, int(round(21 * size / 512)) | 1)


def _soft_alpha(rng, size, strands=True):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    alpha = np.zeros((size, size))
    centers = []
    for _ in range(rng.integers(1, 4)):
        cx, cy = rng.uniform(0.3 * size, 0.7 * size, 2)
        a, b = rng.uniform(0.14 * size, 0.28 * size, 2)
        th = rng.uniform(0, np.pi)
        u = (xx - cx) * np.cos(th) + (yy - cy) * np.sin(th)
        v = -(xx - cx) * np.sin(th) + (yy - cy) * np.cos(th)
        # approximate signed distance to the ellipse boundary, in pixels
        sd = (np.sqrt((u / a) ** 2 + (v / b) ** 2) - 1.0) * min(a, b)
        soft = rng.uniform(0.8, 2.0)
        alpha = np.maximum(alpha, np.clip(0.5 - sd / soft, 0.0, 1.0))
        centers.append((cx, cy, max(a, b)))
    for _ in range(rng.integers(1, 4) if strands else 0):
        cx, cy, r = centers[rng.integers(len(centers))]
        ang = rng.uniform(0, 2 * np.pi)
        reach = r + rng.uniform(0.1, 0.3) * size
        seg = LineSegment(cx, cy, cx + reach * np.cos(ang), cy + reach * np.sin(ang))
        strand = render_segments((size, size), [seg], width=rng.uniform(1.0, 2.0))
        alpha = np.maximum(alpha, rng.uniform(0.6, 1.0) * strand)
    return alpha.astype(np.float32)


def _smooth_noise(rng, size, cells=4, channels=3):
    coarse = rng.uniform(0, 1, size=(cells, cells, channels)).astype(np.float32)
    return resize_bilinear(coarse, size, size)


def _foreground(rng, size):
    base = np.array(colorsys.hsv_to_rgb(rng.uniform(0, 1), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)))
    tint = _smooth_noise(rng, size, cells=3) - 0.5
    return np.clip(base + 0.2 * tint, 0, 1).astype(np.float32)


def _background(rng, size):
    gray = rng.uniform(0.35, 0.65)
    bg = gray + 0.25 * (_smooth_noise(rng, size) - 0.5) + 0.05 * (rng.uniform(0, 1, 3) - 0.5)
    segs = []
    for _ in range(rng.integers(2, 6)):
        while True:
            p = rng.uniform(0, size - 1, 4)
            if np.hypot(p[2] - p[0], p[3] - p[1]) > 0.4 * size:
                break
        segs.append(LineSegment(*p))
        stroke = render_segments((size, size), [segs[-1]], width=rng.uniform(1.0, 2.5))
        bg = bg * (1.0 - rng.uniform(0.4, 0.7) * stroke[..., None])
    return np.clip(bg, 0, 1).astype(np.float32), segs


def synth_sample(task, seed, size=64):
    """Generate one sample for ``task`` (``"matting"``, ``"seg"`` or ``"bgline"``)."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    rng = np.random.default_rng([seed, TASKS.index(task)])
    alpha = _soft_alpha(rng, size, strands=task != SEG)
    fg = _foreground(rng, size)
    bg, _ = _background(rng, size)
    if task == SEG:
        # segmentation datasets come with hard masks
        alpha = (alpha >= 0.5).astype(np.float32)
    image = composite(fg, bg, alpha)
    if rng.random() < 0.3:
        image = gaussian_blur(image, rng.uniform(0.5, 1.0))
    image = add_gaussian_noise(image, rng.uniform(0.0, 0.02), int(rng.integers(2 ** 32)))

    distance = None
    if task == BGLINE:
        distance = homography_adaptation(to_gray(bg), n=ADAPTATION_VIEWS, seed=int(rng.integers(2 ** 32)))
    guidance = perturb_guidance(make_guidance(alpha, erode_k=guidance_kernel(size)), distance,
                                seed=int(rng.integers(2 ** 32)))

    bundle = SampleBundle(image=image, guidance=guidance, task=task)
    if task == MATTING:
        bundle.alpha = alpha
    elif task == SEG:
        bundle.seg = alpha
        bundle.edge = edge_from_mask(alpha)
    else:
        bundle.alpha = alpha
        bundle.distance = distance
        bundle.bl = background_line_gt(line_activation(distance), alpha)
    return bundle.validate()
