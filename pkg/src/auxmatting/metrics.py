"""Matting error measures (SAD, MSE, Grad, Conn) and a directory evaluator."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .imgcore import dilate, read_png

METRICS = ("sad", "mse", "grad", "conn")


def _pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise ValueError(f"expected two equal 2-D mattes, got {pred.shape} and {gt.shape}")
    return pred, gt


def _region(mask, shape):
    if mask is None:
        return np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise ValueError("region mask shape mismatch")
    return mask


def sad(pred, gt, mask=None):
    """Sum of absolute differences, in thousands."""
    pred, gt = _pair(pred, gt)
    return float(np.abs(pred - gt)[_region(mask, gt.shape)].sum() / 1000.0)


def mse(pred, gt, mask=None):
    """Mean squared error over the region; 0 for an empty region."""
    pred, gt = _pair(pred, gt)
    m = _region(mask, gt.shape)
    if not m.any():
        return 0.0
    return float(((pred - gt) ** 2)[m].mean())


def _gauss(x, sigma):
    return np.exp(-x ** 2 / (2 * sigma ** 2)) / (sigma * np.sqrt(2 * np.pi))


def _dgauss(x, sigma):
    return -x * _gauss(x, sigma) / sigma ** 2


def gauss_gradient_filters(sigma):
    """Separable factors of the normalized Gaussian-derivative filter.

    The x filter is ``outer(smooth, deriv)``: smoothing along rows, derivative
    along columns. Truncated where the Gaussian falls below 1% of its peak.
    """
    half = int(np.ceil(sigma * np.sqrt(-2 * np.log(np.sqrt(2 * np.pi) * sigma * 1e-2))))
    u = np.arange(-half, half + 1, dtype=np.float64)
    smooth, deriv = _gauss(u, sigma), _dgauss(u, sigma)
    norm = np.sqrt((smooth ** 2).sum() * (deriv ** 2).sum())
    return smooth, deriv / norm


def gradient_magnitude(alpha, sigma=1.4):
    alpha = np.asarray(alpha, dtype=np.float64)
    smooth, deriv = gauss_gradient_filters(sigma)
    gx = ndimage.convolve1d(ndimage.convolve1d(alpha, smooth, axis=0, mode="nearest"),
                            deriv, axis=1, mode="nearest")
    gy = ndimage.convolve1d(ndimage.convolve1d(alpha, deriv, axis=0, mode="nearest"),
                            smooth, axis=1, mode="nearest")
    return np.hypot(gx, gy)


def grad_error(pred, gt, sigma=1.4, mask=None):
    pred, gt = _pair(pred, gt)
    diff = gradient_magnitude(pred, sigma) - gradient_magnitude(gt, sigma)
    return float((diff ** 2)[_region(mask, gt.shape)].sum() / 1000.0)


def largest_component(mask):
    """Largest 4-connected foreground component (empty if no foreground)."""
    labels, n = ndimage.label(mask)
    if n == 0:
        return np.zeros(mask.shape, dtype=bool)
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    return labels == int(np.argmax(counts))


def conn_thresholds(step=0.1):
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError("conn step must divide 1")
    return np.arange(n + 1) / n


def connectivity_levels(pred, gt, step=0.1):
    """Per-pixel level ``l``: the last threshold at which the pixel still belongs
    to the largest component shared by both thresholded mattes (1 if always)."""
    pred, gt = _pair(pred, gt)
    ths = conn_thresholds(step)
    level = np.full(gt.shape, -1.0)
    for i in range(1, len(ths)):
        omega = largest_component((pred >= ths[i]) & (gt >= ths[i]))
        level[(level == -1) & ~omega] = ths[i - 1]
    level[level == -1] = 1.0
    return level


def conn_error(pred, gt, step=0.1, mask=None):
    pred, gt = _pair(pred, gt)
    level = connectivity_levels(pred, gt, step)
    dp, dg = pred - level, gt - level
    phi_p = 1 - dp * (dp >= 0.15)
    phi_g = 1 - dg * (dg >= 0.15)
    # exactly rounded sum, so the result does not depend on summation order
    return math.fsum(np.abs(phi_p - phi_g)[_region(mask, gt.shape)].tolist()) / 1000.0


def detail_region(gt_alpha, band_k=15):
    """Soft pixels of the ground truth, dilated by a ``band_k`` square."""
    soft = (np.asarray(gt_alpha) > 0) & (np.asarray(gt_alpha) < 1)
    return dilate(soft.astype(np.float32), band_k) > 0


@dataclass
class EvalOptions:
    detail_band: int = 15
    grad_sigma: float = 1.4
    conn_step: float = 0.1


def image_metrics(pred, gt, opts=None):
    opts = opts or EvalOptions()
    region = detail_region(gt, opts.detail_band)
    out = {"detail_pixels": int(region.sum())}
    for name, mask in (("whole", None), ("detail", region)):
        out[name] = {
            "sad": sad(pred, gt, mask),
            "mse": mse(pred, gt, mask),
            "grad": grad_error(pred, gt, opts.grad_sigma, mask),
            "conn": conn_error(pred, gt, opts.conn_step, mask),
        }
    return out


@dataclass
class EvalReport:
    options: EvalOptions
    per_image: dict = field(default_factory=dict)

    @property
    def count(self):
        return len(self.per_image)

    def aggregate(self):
        agg = {}
        for part in ("whole", "detail"):
            agg[part] = {m: (float(np.mean([r[part][m] for r in self.per_image.values()]))
                             if self.per_image else 0.0) for m in METRICS}
        return agg

    def to_dict(self):
        return {
            "count": self.count,
            "options": {"detail_band": self.options.detail_band,
                        "grad_sigma": self.options.grad_sigma,
                        "conn_step": self.options.conn_step},
            "per_image": self.per_image,
            "aggregate": self.aggregate(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_table(self):
        """Fixed-width Whole/Detail table; MSE is shown x1e3."""
        agg = self.aggregate()
        lw = max([8] + [len(n) for n in self.per_image])
        head = f"{'':{lw}s}|{'Whole Image':^40s}|{'Detail':^40s}"
        cols = "".join(f"{c:>10s}" for c in ("SAD", "MSE(e-3)", "Grad", "Conn"))
        lines = [head, f"{'':{lw}s}|{cols}|{cols}"]

        def row(label, rec):
            cells = []
            for part in ("whole", "detail"):
                v = rec[part]
                cells.append(f"{v['sad']:10.4f}{v['mse'] * 1e3:10.4f}{v['grad']:10.4f}{v['conn']:10.4f}")
            return f"{label:{lw}s}|" + "|".join(cells)

        for name in sorted(self.per_image):
            lines.append(row(name, self.per_image[name]))
        lines.append(row("mean", agg))
        return "\n".join(lines) + "\n"


def _png_names(d):
    return sorted(f for f in os.listdir(d) if f.lower().endswith(".png"))


def evaluate(pred_dir, gt_dir, options=None):
    """Score every ground-truth PNG against the same-named prediction."""
    opts = options or EvalOptions()
    names = _png_names(gt_dir)
    if not names:
        raise FileNotFoundError(f"no PNG ground truths in {gt_dir}")
    missing = [n for n in names if not os.path.isfile(os.path.join(pred_dir, n))]
    if missing:
        raise FileNotFoundError(f"predictions missing for: {', '.join(missing)}")
    report = EvalReport(opts)
    for name in names:
        pred = _as_matte(read_png(os.path.join(pred_dir, name)))
        gt = _as_matte(read_png(os.path.join(gt_dir, name)))
        report.per_image[name] = image_metrics(pred, gt, opts)
    return report


def _as_matte(img):
    # colour PNGs are accepted; the first channel is taken as alpha
    return img if img.ndim == 2 else img[..., 0]
