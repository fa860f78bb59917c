"""Command-line front end: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 I/O or bad input, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import imgcore, linedet, metrics
from .compositor import composite, make_guidance
from .pseudogt import background_line_gt

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write_text(path, text):
    data = text.encode()
    imgcore.atomic_write(path, lambda fh: fh.write(data))


def _gray(img):
    return img if img.ndim == 2 else imgcore.to_gray(img)


def _rgb(img):
    return np.repeat(img[..., None], 3, axis=2) if img.ndim == 2 else img


def cmd_composite(a):
    fg, bg = _rgb(imgcore.read_png(a.fg)), _rgb(imgcore.read_png(a.bg))
    alpha = _gray(imgcore.read_png(a.alpha))
    imgcore.write_png(a.out, composite(fg, bg, alpha))


def cmd_guidance(a):
    alpha = _gray(imgcore.read_png(a.alpha))
    imgcore.write_png(a.out, make_guidance(alpha, a.threshold, a.erode))


def cmd_lsd(a):
    gray = _gray(imgcore.read_png(a.image))
    segs = linedet.lsd_detect(gray, angle_tol=a.angle_tol, min_density=a.min_density,
                              min_length=a.min_length, mag_quantile=a.mag_quantile)
    _write_text(a.out_segments, linedet.segments_to_json(segs))
    print(f"{len(segs)} segments")


def cmd_homoadapt(a):
    gray = _gray(imgcore.read_png(a.image))
    imgcore.write_field(a.out_distance, linedet.homography_adaptation(gray, n=a.n, seed=a.seed))


def cmd_pseudogt(a):
    distance = imgcore.read_field(a.distance)
    if distance.ndim != 2:
        raise ValueError("distance field must have one channel")
    alpha = _gray(imgcore.read_png(a.alpha))
    bl = background_line_gt(linedet.line_activation(distance), alpha)
    imgcore.write_field(a.out_bl, bl.stacked())


def cmd_synth(a):
    from .igdrnet.data import sample_seed, synth_sample

    if a.n < 0:
        raise UsageError("--n must be non-negative")
    os.makedirs(a.out_dir, exist_ok=True)
    for i in range(a.n):
        s = synth_sample(a.task, sample_seed(a.seed, i), a.size)
        stem = os.path.join(a.out_dir, f"{i:04d}")
        imgcore.write_png(stem + "_image.png", s.image)
        imgcore.write_png(stem + "_guidance.png", s.guidance)
        if s.alpha is not None:
            imgcore.write_png(stem + "_alpha.png", s.alpha)
        if s.seg is not None:
            imgcore.write_png(stem + "_seg.png", s.seg)
            imgcore.write_png(stem + "_edge.png", s.edge)
        if s.bl is not None:
            imgcore.write_field(stem + "_bl.fld", s.bl.stacked())
            imgcore.write_field(stem + "_distance.fld", s.distance)


def cmd_train(a):
    from .autodiff import save_checkpoint
    from .igdrnet.train import TrainConfig, train

    cfg = TrainConfig()
    if a.config:
        with open(a.config) as fh:
            cfg = TrainConfig.from_json(fh.read())
    if a.seed is not None:
        cfg.seed = a.seed
    if a.steps is not None:
        cfg.steps = a.steps

    def progress(step, report):
        if a.verbose:
            print(f"step {step:4d} {report.task:8s} {report.total:.4f}", flush=True)

    result = train(cfg, progress=progress)
    save_checkpoint(a.out_checkpoint, result.network.params)
    if a.out_curves:
        result.write_curves(a.out_curves)


def cmd_infer(a):
    from .autodiff import load_checkpoint
    from .igdrnet.network import Network

    net = Network.from_params(load_checkpoint(a.checkpoint))
    image = _rgb(imgcore.read_png(a.image))
    guidance = (_gray(imgcore.read_png(a.guidance)) >= 0.5).astype(np.float32)
    if guidance.shape != image.shape[:2]:
        raise ValueError("image and guidance sizes differ")
    imgcore.write_png(a.out_alpha, net.predict_alpha(image, guidance))


def cmd_eval(a):
    opts = metrics.EvalOptions(detail_band=a.detail_band, grad_sigma=a.grad_sigma, conn_step=a.conn_step)
    report = metrics.evaluate(a.pred_dir, a.gt_dir, opts)
    if a.out_report:
        _write_text(a.out_report, report.to_json() + "\n")
    sys.stdout.write(report.to_table())
    if a.max_sad is not None and report.aggregate()["whole"]["sad"] > a.max_sad:
        print(f"aggregate SAD above {a.max_sad}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_gradcheck(a):
    from .autodiff.checks import CASES, run_suite

    names = None if a.op == "all" else [a.op]
    if names and names[0] not in CASES:
        raise UsageError(f"unknown op {a.op!r}; choose from: all, {', '.join(CASES)}")
    rows = run_suite(names, seeds=range(a.seeds))
    bad = 0
    for name, err, tol, ok in rows:
        print(f"{name:24s} {err:.3e}  tol {tol:.0e}  {'ok' if ok else 'FAIL'}")
        bad += not ok
    return EXIT_VERIFY if bad else EXIT_OK


def build_parser():
    p = _Parser(prog="auxmatting", description="Mask-guided matting toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("composite", help="I = A*F + (1-A)*B")
    s.add_argument("--fg", required=True)
    s.add_argument("--bg", required=True)
    s.add_argument("--alpha", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_composite)

    s = sub.add_parser("guidance", help="binarize and erode an alpha matte")
    s.add_argument("--alpha", required=True)
    s.add_argument("--threshold", type=float, default=0.95)
    s.add_argument("--erode", type=int, default=21)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_guidance)

    s = sub.add_parser("lsd", help="detect line segments, write JSON")
    s.add_argument("--image", required=True)
    s.add_argument("--out-segments", required=True)
    s.add_argument("--angle-tol", type=float, default=22.5)
    s.add_argument("--min-density", type=float, default=0.7)
    s.add_argument("--min-length", type=float, default=8.0)
    s.add_argument("--mag-quantile", type=float, default=0.7)
    s.set_defaults(func=cmd_lsd)

    s = sub.add_parser("homoadapt", help="median distance field over random homographies")
    s.add_argument("--image", required=True)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-distance", required=True)
    s.set_defaults(func=cmd_homoadapt)

    s = sub.add_parser("pseudogt", help="background-line target (values, valid) as FLD1")
    s.add_argument("--distance", required=True)
    s.add_argument("--alpha", required=True)
    s.add_argument("--out-bl", required=True)
    s.set_defaults(func=cmd_pseudogt)

    s = sub.add_parser("synth", help="write procedural training samples")
    s.add_argument("--task", required=True, choices=("matting", "seg", "bgline"))
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="multi-task training")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--out-checkpoint", required=True)
    s.add_argument("--out-curves")
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("infer", help="predict an alpha matte")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--image", required=True)
    s.add_argument("--guidance", required=True)
    s.add_argument("--out-alpha", required=True)
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("eval", help="SAD/MSE/Grad/Conn over a directory pair")
    s.add_argument("--pred-dir", required=True)
    s.add_argument("--gt-dir", required=True)
    s.add_argument("--out-report")
    s.add_argument("--detail-band", type=int, default=15)
    s.add_argument("--grad-sigma", type=float, default=1.4)
    s.add_argument("--conn-step", type=float, default=0.1)
    s.add_argument("--max-sad", type=float, help="exit 3 if aggregate whole-image SAD exceeds this")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gradcheck", help="finite-difference check of autodiff ops")
    s.add_argument("--op", default="all")
    s.add_argument("--seeds", type=int, default=3)
    s.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        code = args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
