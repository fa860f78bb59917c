"""Independent reference implementations used by the metric tests."""
import math
from collections import deque

import numpy as np


def naive_grad_error(pred, gt, sigma=1.4):
    eps = 1e-2
    half = int(math.ceil(sigma * math.sqrt(-2 * math.log(math.sqrt(2 * math.pi) * sigma * eps))))
    size = 2 * half + 1

    def g(x):
        return math.exp(-x * x / (2 * sigma * sigma)) / (sigma * math.sqrt(2 * math.pi))

    hx = np.zeros((size, size))
    for i in range(size):
        for j in range(size):
            hx[i, j] = g(i - half) * (-(j - half) * g(j - half) / sigma ** 2)
    hx /= math.sqrt((hx ** 2).sum())
    hy = hx.T

    def conv(img, k):
        h, w = img.shape
        out = np.zeros_like(img, dtype=np.float64)
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for i in range(size):
                    for j in range(size):
                        yy = min(max(y - (i - half), 0), h - 1)
                        xx = min(max(x - (j - half), 0), w - 1)
                        acc += k[i, j] * img[yy, xx]
                out[y, x] = acc
        return out

    def amp(a):
        return np.sqrt(conv(a, hx) ** 2 + conv(a, hy) ** 2)

    return float(((amp(np.asarray(pred, float)) - amp(np.asarray(gt, float))) ** 2).sum() / 1000)


def _largest_cc_flood(mask):
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    best = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            comp, q = [], deque([(y, x)])
            seen[y, x] = True
            while q:
                cy, cx = q.popleft()
                comp.append((cy, cx))
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        q.append((ny, nx))
            if len(comp) > len(best):
                best = comp
    out = np.zeros_like(mask, dtype=bool)
    for y, x in best:
        out[y, x] = True
    return out


def flood_conn_error(pred, gt, step=0.1):
    pred, gt = np.asarray(pred, float), np.asarray(gt, float)
    n = int(round(1 / step))
    ths = [i / n for i in range(n + 1)]
    h, w = gt.shape
    level = np.ones((h, w))
    assigned = np.zeros((h, w), dtype=bool)
    for i in range(1, n + 1):
        omega = _largest_cc_flood((pred >= ths[i]) & (gt >= ths[i]))
        for y in range(h):
            for x in range(w):
                if not assigned[y, x] and not omega[y, x]:
                    level[y, x] = ths[i - 1]
                    assigned[y, x] = True
    terms = []
    for y in range(h):
        for x in range(w):
            dp, dg = pred[y, x] - level[y, x], gt[y, x] - level[y, x]
            pp = 1 - dp if dp >= 0.15 else 1.0
            pg = 1 - dg if dg >= 0.15 else 1.0
            terms.append(abs(pp - pg))
    return math.fsum(terms) / 1000


def corpus():
    """Small mattes (<= 24x24) exercising the connectivity sweep."""
    out = []
    rng = np.random.default_rng(1234)
    yy, xx = np.mgrid[:24, :24]
    blob = np.clip(1.2 - np.hypot(yy - 11, xx - 12) / 8, 0, 1)
    out.append(("blob", blob, np.clip(blob + rng.normal(0, 0.1, blob.shape), 0, 1)))
    two = np.zeros((16, 16))
    two[2:7, 2:7] = 1
    two_pred = two.copy()
    two_pred[10:14, 10:14] = 0.8
    out.append(("two-blob", two, two_pred))
    for k in range(6):
        s = int(rng.integers(6, 25))
        gt = np.clip(rng.random((s, s)) * 1.4 - 0.2, 0, 1)
        out.append((f"noise{k}", gt, np.clip(gt + rng.normal(0, 0.25, gt.shape), 0, 1)))
    q = np.round(rng.random((20, 20)) * 10) / 10   # values exactly on the threshold grid
    out.append(("quantized", q, np.round(rng.random((20, 20)) * 10) / 10))
    out.append(("u8", np.round(rng.random((12, 18)) * 255) / 255, np.round(rng.random((12, 18)) * 255) / 255))
    return out
