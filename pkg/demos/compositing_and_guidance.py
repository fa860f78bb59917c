# Build a synthetic training pair the way the matting data pipeline does:
# composite a foreground over a background with a soft matte, then derive the
# coarse guidance mask the network is conditioned on.
#
# Writes PNGs into ./demo_out/compositing.

import os

import numpy as np

from auxmatting.compositor import composite, edge_from_mask, make_guidance, perturb_guidance
from auxmatting.imgcore import gaussian_blur, write_png

out = os.path.join("demo_out", "compositing")
os.makedirs(out, exist_ok=True)

size = 96
yy, xx = np.mgrid[0:size, 0:size]

# a disc with a blurred rim stands in for a hairy silhouette
alpha = ((yy - 48) ** 2 + (xx - 44) ** 2 < 30 ** 2).astype(np.float32)
alpha = gaussian_blur(alpha, 2.0)

fg = np.stack([np.full((size, size), 0.85), 0.3 + 0.4 * yy / size, np.full((size, size), 0.2)], -1)
bg = np.stack([0.1 + 0.8 * xx / size, np.full((size, size), 0.5), 0.9 - 0.6 * yy / size], -1)
image = composite(fg.astype(np.float32), bg.astype(np.float32), alpha)

print("alpha range       ", alpha.min(), alpha.max())
print("soft pixels       ", int(((alpha > 0) & (alpha < 1)).sum()))

# guidance: keep confident foreground, then erode so it never touches the rim
guidance = make_guidance(alpha, threshold=0.95, erode_k=21)
print("guidance coverage ", guidance.mean().round(3), "vs alpha>0.95:", (alpha > 0.95).mean().round(3))

# training-time corruption: random line cut-outs or a dilation of the mask
for seed in range(3):
    noisy = perturb_guidance(guidance, seed=seed)
    changed = int((noisy != guidance).sum())
    print(f"perturbation seed {seed}: {changed} pixels changed")
    write_png(os.path.join(out, f"guidance_perturbed_{seed}.png"), noisy)

# the segmentation task supervises a thin boundary band as well
edge = edge_from_mask((alpha > 0.5).astype(np.float32), radius=2)
print("edge pixels       ", int(edge.sum()))

write_png(os.path.join(out, "image.png"), image)
write_png(os.path.join(out, "alpha.png"), alpha)
write_png(os.path.join(out, "guidance.png"), guidance)
write_png(os.path.join(out, "edge.png"), edge)
print("wrote", sorted(os.listdir(out)))
