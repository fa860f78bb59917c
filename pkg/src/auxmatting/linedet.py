"""Line segments, homographies and distance-to-line fields.

Coordinates are continuous pixel coordinates with pixel centers on the
integer grid: pixel ``img[y, x]`` sits at ``(x, y)``.

The detector is a reduced LSD: gradient-magnitude thresholding, greedy
region growing over level-line orientation and a moment-based rectangle
fit gated by aligned-point density. It has no NFA validation. Orientation
is compared modulo pi, so the two flanks of a thin stroke grow into a single
region and yield one segment along the stroke's center line.
"""
from __future__ import annotations

import json
import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage

# smallest meaningful gradient for 8-bit data (LSD's quantization bound)
_MIN_MAGNITUDE = (2.0 / 255.0) / math.sin(math.radians(22.5))

_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


class LineSegment(NamedTuple):
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def length(self):
        return math.hypot(self.x2 - self.x1, self.y2 - self.y1)

    @property
    def angle(self):
        """Orientation in [0, pi)."""
        return math.atan2(self.y2 - self.y1, self.x2 - self.x1) % math.pi


def _as_segment_array(segs):
    arr = np.asarray([tuple(s) for s in segs], dtype=np.float64)
    return arr.reshape(-1, 4)


def segments_to_json(segs):
    return json.dumps([{"x1": float(s[0]), "y1": float(s[1]), "x2": float(s[2]), "y2": float(s[3])}
                       for s in segs])


def segments_from_json(text):
    return [LineSegment(d["x1"], d["y1"], d["x2"], d["y2"]) for d in json.loads(text)]


def grad_field(gray):
    """2x2 forward-difference gradient magnitude and level-line angle.

    The estimate at ``[y, x]`` is centered at ``(x + 0.5, y + 0.5)``. The last
    row and column have no 2x2 support and get zero magnitude.
    """
    img = np.asarray(gray, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("grad_field expects a single-channel image")
    gx = np.zeros_like(img)
    gy = np.zeros_like(img)
    a, b = img[:-1, :-1], img[:-1, 1:]
    c, d = img[1:, :-1], img[1:, 1:]
    gx[:-1, :-1] = (b - a + d - c) / 2.0
    gy[:-1, :-1] = (c - a + d - b) / 2.0
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gx, -gy)
    return mag, ang


def _orientation_diff(a, b):
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


def lsd_detect(gray, angle_tol=22.5, min_density=0.7, min_length=8.0, mag_quantile=0.7,
               valid=None, sigma=0.6):
    """Detect straight segments in a grayscale image.

    The image is smoothed with a Gaussian of ``sigma`` pixels before the
    gradient is taken (0 disables it). ``valid`` optionally marks pixels
    holding real image content; gradients touching an invalid pixel are
    ignored, so warped views do not produce spurious border lines.
    """
    img = np.asarray(gray, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("lsd_detect expects a single-channel image")
    if min(img.shape) < 16:
        raise ValueError("image side must be at least 16 pixels")
    h, w = img.shape
    if sigma > 0:
        img = ndimage.gaussian_filter(img, sigma, mode="nearest", truncate=3.0)
    mag, ang = grad_field(img)
    if valid is not None:
        v = np.asarray(valid) > 0.5
        if sigma > 0:
            v = ndimage.binary_erosion(v, iterations=int(math.ceil(3 * sigma)), border_value=1)
        ok = np.zeros_like(v)
        ok[:-1, :-1] = v[:-1, :-1] & v[:-1, 1:] & v[1:, :-1] & v[1:, 1:]
        mag = np.where(ok, mag, 0.0)
    thr = max(float(np.quantile(mag, mag_quantile)), _MIN_MAGNITUDE)
    usable = mag > thr
    theta = np.mod(ang, math.pi)
    tol = math.radians(angle_tol)

    ys, xs = np.nonzero(usable)
    order = np.argsort(-mag[ys, xs], kind="stable")
    used = ~usable
    segments = []
    for idx in order:
        sy, sx = int(ys[idx]), int(xs[idx])
        if used[sy, sx]:
            continue
        region, reg_angle = _grow_region(sy, sx, theta, used, tol, h, w)
        if len(region) < 2:
            continue
        seg = _fit_segment(region, reg_angle, mag, tol, min_density)
        if seg is not None and seg.length >= min_length:
            segments.append(seg)
    return segments


def _grow_region(sy, sx, theta, used, tol, h, w):
    used[sy, sx] = True
    region = [(sy, sx)]
    c2 = math.cos(2 * theta[sy, sx])
    s2 = math.sin(2 * theta[sy, sx])
    reg_angle = theta[sy, sx]
    i = 0
    while i < len(region):
        y, x = region[i]
        i += 1
        for dy, dx in _NEIGHBORS:
            ny, nx = y + dy, x + dx
            if ny < 0 or nx < 0 or ny >= h or nx >= w or used[ny, nx]:
                continue
            t = theta[ny, nx]
            if _orientation_diff(t, reg_angle) <= tol:
                used[ny, nx] = True
                region.append((ny, nx))
                c2 += math.cos(2 * t)
                s2 += math.sin(2 * t)
                reg_angle = 0.5 * math.atan2(s2, c2) % math.pi
    return region, reg_angle


def _fit_segment(region, reg_angle, mag, tol, min_density):
    pts = np.asarray(region, dtype=np.float64)
    wts = mag[pts[:, 0].astype(int), pts[:, 1].astype(int)]
    py = pts[:, 0] + 0.5
    px = pts[:, 1] + 0.5
    wsum = wts.sum()
    cx = (wts * px).sum() / wsum
    cy = (wts * py).sum() / wsum
    dx, dy = px - cx, py - cy
    cov = np.array([[(wts * dx * dx).sum(), (wts * dx * dy).sum()],
                    [(wts * dx * dy).sum(), (wts * dy * dy).sum()]]) / wsum
    evals, evecs = np.linalg.eigh(cov)
    ux, uy = evecs[:, 1]
    axis_angle = math.atan2(uy, ux) % math.pi
    # blobs: principal axis disagrees with the level-line orientation
    if _orientation_diff(axis_angle, reg_angle) > tol:
        return None
    s = dx * ux + dy * uy
    t = -dx * uy + dy * ux
    length = s.max() - s.min()
    width = t.max() - t.min() + 1.0
    density = len(region) / ((length + 1.0) * width)
    if density < min_density:
        return None
    return LineSegment(cx + s.min() * ux, cy + s.min() * uy, cx + s.max() * ux, cy + s.max() * uy)


def sample_homography(seed, shape, max_rot=30.0, scale=(0.7, 1.3), max_persp=0.1, max_trans=None):
    """Random homography about the image center.

    Composition (applied right to left): perspective, scale, rotation,
    translation. Perspective acts in coordinates normalized by half the
    shorter image side. ``max_rot`` is in degrees; ``max_trans`` defaults to
    a tenth of the shorter side, in pixels.
    """
    h, w = shape[:2]
    if max_trans is None:
        max_trans = 0.1 * min(h, w)
    rng = np.random.default_rng(seed)
    rot = math.radians(rng.uniform(-max_rot, max_rot))
    s = rng.uniform(scale[0], scale[1])
    px, py = rng.uniform(-max_persp, max_persp, size=2)
    tx, ty = rng.uniform(-max_trans, max_trans, size=2)

    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    half = min(h, w) / 2.0
    to_center = np.array([[1.0, 0, -cx], [0, 1.0, -cy], [0, 0, 1.0]])
    from_center = np.array([[1.0, 0, cx + tx], [0, 1.0, cy + ty], [0, 0, 1.0]])
    persp = np.array([[1.0, 0, 0], [0, 1.0, 0], [px / half, py / half, 1.0]])
    c, sn = math.cos(rot), math.sin(rot)
    rs = np.array([[s * c, -s * sn, 0], [s * sn, s * c, 0], [0, 0, 1.0]])
    mat = from_center @ rs @ persp @ to_center
    if mat[2, 2] != 0:
        mat = mat / mat[2, 2]
    return mat


def apply_homography(H, x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    den = H[2, 0] * x + H[2, 1] * y + H[2, 2]
    return ((H[0, 0] * x + H[0, 1] * y + H[0, 2]) / den,
            (H[1, 0] * x + H[1, 1] * y + H[1, 2]) / den)


def warp_image(img, H):
    """Warp by inverse mapping: ``out(q) = img(H^-1 q)``, bilinear, zero outside."""
    img = np.asarray(img, dtype=np.float32)
    h, w = img.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    sx, sy = apply_homography(np.linalg.inv(H), xx, yy)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    src = img.astype(np.float64)
    out = np.zeros(src.shape, dtype=np.float64)
    for oy, wy in ((0, 1.0 - fy), (1, fy)):
        for ox, wx in ((0, 1.0 - fx), (1, fx)):
            yi, xi = y0 + oy, x0 + ox
            inside = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
            wgt = np.where(inside, wy * wx, 0.0)
            vals = src[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
            out += (wgt[..., None] * vals) if src.ndim == 3 else wgt * vals
    return out.astype(np.float32)


def warp_segments(segs, H, shape=None):
    """Map segment endpoints through ``H``.

    With ``shape`` given, segments whose two endpoints both land outside the
    ``(h, w)`` frame are dropped.
    """
    arr = _as_segment_array(segs)
    x1, y1 = apply_homography(H, arr[:, 0], arr[:, 1])
    x2, y2 = apply_homography(H, arr[:, 2], arr[:, 3])
    out = []
    for a, b, c, d in zip(x1, y1, x2, y2):
        if not all(map(math.isfinite, (a, b, c, d))):
            continue
        if shape is not None:
            h, w = shape[:2]
            in1 = 0 <= a <= w - 1 and 0 <= b <= h - 1
            in2 = 0 <= c <= w - 1 and 0 <= d <= h - 1
            if not (in1 or in2):
                continue
        out.append(LineSegment(float(a), float(b), float(c), float(d)))
    return out


def distance_field(segs, h, w):
    """Per-pixel Euclidean distance to the nearest segment, float64 ``(h, w)``.

    Without segments every pixel gets the sentinel ``h + w``.
    """
    if h < 1 or w < 1:
        raise ValueError("field size must be >= 1")
    arr = _as_segment_array(segs)
    if len(arr) == 0:
        return np.full((h, w), float(h + w))
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    best = np.full((h, w), np.inf)
    for x1, y1, x2, y2 in arr:
        dx, dy = x2 - x1, y2 - y1
        ll = dx * dx + dy * dy
        if ll > 0:
            t = np.clip(((xx - x1) * dx + (yy - y1) * dy) / ll, 0.0, 1.0)
        else:
            t = 0.0
        np.minimum(best, np.hypot(xx - (x1 + t * dx), yy - (y1 + t * dy)), out=best)
    return best


def view_distance_field(gray, H, detect_params=None):
    """Distance field of the lines detected in one warped view, mapped back."""
    gray = np.asarray(gray, dtype=np.float32)
    h, w = gray.shape
    warped = warp_image(gray, H)
    valid = warp_image(np.ones_like(gray), H) >= 1.0 - 1e-6
    segs = lsd_detect(warped, valid=valid, **(detect_params or {}))
    back = warp_segments(segs, np.linalg.inv(H), shape=(h, w))
    return distance_field(back, h, w)


def homography_adaptation(gray, n=100, seed=0, homography_params=None, detect_params=None):
    """Per-pixel lower median of ``n`` back-warped distance fields.

    View ``i`` uses ``sample_homography((seed, i), ...)``, so each view is
    reproducible on its own.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gray = np.asarray(gray, dtype=np.float32)
    fields = []
    for i in range(n):
        H = sample_homography((seed, i), gray.shape, **(homography_params or {}))
        fields.append(view_distance_field(gray, H, detect_params))
    stack = np.sort(np.stack(fields), axis=0)
    return stack[(n - 1) // 2]


def line_activation(distance):
    """``exp(-d / 2)``: 1 on a line, decaying with distance."""
    return np.exp(-np.asarray(distance, dtype=np.float64) / 2.0)


def render_segments(shape, segs, width=1.5):
    """Anti-aliased coverage in [0, 1] of round-capped strokes of ``width`` pixels."""
    h, w = shape[:2]
    d = distance_field(segs, h, w)
    return np.clip(width / 2.0 + 0.5 - d, 0.0, 1.0).astype(np.float32)
