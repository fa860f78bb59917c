"""Raster helpers shared by every other module.

Images are plain numpy arrays, channel-last: ``(H, W)`` for single-channel
rasters (mattes, masks, distance fields) and ``(H, W, C)`` otherwise. Values
are float32 in [0, 1] unless stated. Borders are replicated everywhere.
"""
from __future__ import annotations

import math
import os
import struct
import tempfile

import numpy as np
from PIL import Image
from scipy import ndimage

FIELD_MAGIC = b"FLD1"


def _check_odd(k):
    if k < 1 or k % 2 == 0:
        raise ValueError(f"kernel side must be a positive odd integer, got {k}")


def erode(mask, k):
    """Min filter over a ``k x k`` window (edge replicate)."""
    _check_odd(k)
    mask = np.asarray(mask, dtype=np.float32)
    if k == 1:
        return mask.copy()
    return ndimage.minimum_filter(mask, size=k, mode="nearest")


def dilate(mask, k):
    """Max filter over a ``k x k`` window (edge replicate)."""
    _check_odd(k)
    mask = np.asarray(mask, dtype=np.float32)
    if k == 1:
        return mask.copy()
    return ndimage.maximum_filter(mask, size=k, mode="nearest")


def gaussian_kernel1d(sigma):
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img, sigma):
    """Separable Gaussian blur, radius ``ceil(3 sigma)``, normalized kernel."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    img = np.asarray(img)
    k = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(img.astype(np.float64), k, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, k, axis=1, mode="nearest")
    return out.astype(np.float32)


def add_gaussian_noise(img, sigma, seed):
    """Add i.i.d. N(0, sigma^2) noise and clamp to [0, 1]."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    img = np.asarray(img, dtype=np.float32)
    if sigma == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=img.shape)
    return np.clip(img + noise, 0.0, 1.0).astype(np.float32)


def interp_matrix(n_in, n_out):
    """Row-stochastic ``(n_out, n_in)`` matrix for 1-D linear resampling.

    Half-pixel convention (align_corners=False): the source coordinate of
    output index ``i`` is ``(i + 0.5) * n_in / n_out - 0.5``, clamped to the
    valid range.
    """
    m = np.zeros((n_out, n_in), dtype=np.float64)
    if n_in == 1:
        m[:, 0] = 1.0
        return m
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.minimum(np.floor(src).astype(int), n_in - 2)
    frac = src - i0
    rows = np.arange(n_out)
    m[rows, i0] = 1.0 - frac
    m[rows, i0 + 1] += frac
    return m


def resize_bilinear(img, new_h, new_w):
    """Bilinear resize with the half-pixel (align_corners=False) convention."""
    if new_h < 1 or new_w < 1:
        raise ValueError("target size must be >= 1")
    img = np.asarray(img)
    h, w = img.shape[:2]
    if (h, w) == (new_h, new_w):
        return img.copy()
    ry = interp_matrix(h, new_h)
    rx = interp_matrix(w, new_w)
    x = img.astype(np.float64)
    if x.ndim == 2:
        out = ry @ x @ rx.T
    else:
        out = np.einsum("ih,hwc,jw->ijc", ry, x, rx)
    return out.astype(img.dtype if img.dtype.kind == "f" else np.float32)


def to_gray(img):
    img = np.asarray(img, dtype=np.float32)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[..., 0]
    return (0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]).astype(np.float32)


def atomic_write(path, payload_fn):
    """Write through a temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.splitext(path)[1])
    try:
        with os.fdopen(fd, "wb") as fh:
            payload_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def quantize_u8(img):
    """Map [0, 1] floats to bytes, rounding half up."""
    x = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)


def read_png(path):
    """Read an 8-bit grayscale or RGB PNG into [0, 1] float32."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK") else "L")
        arr = np.asarray(im)
    return (arr.astype(np.float32) / 255.0).astype(np.float32)


def write_png(path, img):
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[..., 0]
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise ValueError(f"PNG supports 1 or 3 channels, got {arr.shape[2]}")
    u8 = quantize_u8(arr)
    mode = "L" if u8.ndim == 2 else "RGB"

    def payload(fh):
        Image.fromarray(u8, mode=mode).save(fh, format="PNG")

    atomic_write(path, payload)


def write_field(path, data):
    """Write a float raster as FLD1: magic, H/W/C as u32 LE, f32 LE samples."""
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.ndim != 3:
        raise ValueError("field must be (H, W) or (H, W, C)")
    h, w, c = arr.shape
    body = np.ascontiguousarray(arr, dtype="<f4").tobytes()

    def payload(fh):
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<III", h, w, c))
        fh.write(body)

    atomic_write(path, payload)


def read_field(path):
    """Inverse of :func:`write_field`. Single-channel fields come back 2-D."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != FIELD_MAGIC:
        raise ValueError(f"{path}: not an FLD1 file")
    h, w, c = struct.unpack("<III", raw[4:16])
    n = h * w * c
    if len(raw) != 16 + 4 * n:
        raise ValueError(f"{path}: truncated FLD1 payload")
    arr = np.frombuffer(raw, dtype="<f4", count=n, offset=16).astype(np.float32)
    arr = arr.reshape(h, w, c)
    return arr[..., 0] if c == 1 else arr
