# Pseudo ground truth for the background-line task.
#
# A line detector is run on many homography-warped copies of the image, the
# per-view distance fields are mapped back and reduced with a median, and the
# result is turned into a line activation. Lines are only supervised where the
# foreground is transparent enough to reveal them.

import os

import numpy as np

from auxmatting import linedet
from auxmatting.imgcore import write_field, write_png
from auxmatting.linedet import LineSegment
from auxmatting.pseudogt import LINE_BAND, background_line_gt, loss_region_mask

out = os.path.join("demo_out", "lines")
os.makedirs(out, exist_ok=True)

size = 64
truth = [LineSegment(6, 14, 58, 20), LineSegment(30, 8, 24, 58), LineSegment(8, 50, 40, 36)]
gray = (0.85 - 0.6 * linedet.render_segments((size, size), truth, width=2.0)).astype(np.float32)

segs = linedet.lsd_detect(gray)
print(f"direct detection: {len(segs)} segments")
for s in segs:
    print(f"   ({s.x1:5.1f},{s.y1:5.1f}) -> ({s.x2:5.1f},{s.y2:5.1f})  length {s.length:5.1f}")

# a single random view, to see what the adaptation averages over
H = linedet.sample_homography((0, 0), gray.shape)
print("one sampled homography:\n", np.round(H, 3))

distance = linedet.homography_adaptation(gray, n=20, seed=0)
print("median distance at a line pixel:", round(float(distance[17, 30]), 2),
      " far away:", round(float(distance[60, 60]), 2))

activation = linedet.line_activation(distance)

# a half-transparent blob over the left half of the image
yy, xx = np.mgrid[0:size, 0:size]
alpha = np.clip(1.2 - np.hypot(yy - 32, xx - 16) / 20, 0, 1).astype(np.float32)
bl = background_line_gt(activation, alpha)
print("supervised pixels:", int(bl.valid.sum()), "of", size * size,
      f"(ignored where 0.8 <= alpha < 1: {int(((alpha >= 0.8) & (alpha < 1)).sum())})")

band = loss_region_mask(distance, LINE_BAND)
print("loss band covers", round(float(band.mean()), 3), "of the image")

write_png(os.path.join(out, "image.png"), gray)
write_png(os.path.join(out, "activation.png"), activation)
write_png(os.path.join(out, "valid.png"), bl.valid)
write_field(os.path.join(out, "distance.fld"), distance)
