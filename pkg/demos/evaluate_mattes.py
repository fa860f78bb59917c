# Score predicted mattes against ground truth with SAD, MSE, gradient and
# connectivity errors, over the whole image and over the soft detail band.

import os

import numpy as np

from auxmatting import metrics
from auxmatting.imgcore import gaussian_blur, write_png

root = os.path.join("demo_out", "eval")
for sub in ("gt", "pred"):
    os.makedirs(os.path.join(root, sub), exist_ok=True)

rng = np.random.default_rng(0)
yy, xx = np.mgrid[0:64, 0:64]
for i in range(3):
    cy, cx, r = rng.uniform(24, 40), rng.uniform(24, 40), rng.uniform(12, 20)
    gt = gaussian_blur((np.hypot(yy - cy, xx - cx) < r).astype(np.float32), 1.5)
    # a prediction that is slightly too blurry and a bit noisy
    pred = np.clip(gaussian_blur(gt, 1.0 + i) + rng.normal(0, 0.02, gt.shape), 0, 1)
    write_png(os.path.join(root, "gt", f"matte{i}.png"), gt)
    write_png(os.path.join(root, "pred", f"matte{i}.png"), pred)

report = metrics.evaluate(os.path.join(root, "pred"), os.path.join(root, "gt"))
print(report.to_table())

# the building blocks work on arrays directly
gt = np.zeros((20, 20))
pred = gt.copy()
pred[:5] = 0.5
print("SAD", metrics.sad(pred, gt), " MSE", metrics.mse(pred, gt))
print("Grad", round(metrics.grad_error(pred, gt), 4), " Conn", round(metrics.conn_error(pred, gt), 4))
print("Gaussian-derivative filter taps:", len(metrics.gauss_gradient_filters(1.4)[0]))
