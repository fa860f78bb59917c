from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import autodiff as ad
from ..imgcore import atomic_write
from ..pseudogt import LINE_BAND, loss_region_mask, masked_l1
from .data import TASKS, synth_sample, sample_seed
from .losses import task_loss
from .network import NetworkConfig, build_network


def _default_schedule():
    return {t: 1 for t in TASKS}


@dataclass
class TrainConfig:
    base_channels: int = 8
    steps: int = 300
    lr: float = 1e-3
    seed: int = 0
    schedule: dict = field(default_factory=_default_schedule)
    sample_size: int = 64

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        known = {k: raw[k] for k in asdict(cls()) if k in raw}
        unknown = set(raw) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**known)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def cycle(self):
        """Task order for one round: each task repeated by its integer weight."""
        order = []
        for task in TASKS:
            order += [task] * int(self.schedule.get(task, 0))
        if not order:
            raise ValueError("schedule has no task with positive weight")
        return order


@dataclass
class TrainResult:
    network: object
    curves: list  # (step, task, term, value)

    def task_curve(self, task):
        return [v for _, t, term, v in self.curves if t == task and term == "total"]

    def curves_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "task", "term", "value"])
        for row in self.curves:
            writer.writerow([row[0], row[1], row[2], repr(float(row[3]))])
        return buf.getvalue()

    def write_curves(self, path):
        text = self.curves_csv().encode()
        atomic_write(path, lambda fh: fh.write(text))


def train_step(network, sample, state, lr):
    """Forward, backward and one Adam update; returns ``(state, report, grads)``."""
    outputs = network.forward(sample.image, sample.guidance)
    loss, report = task_loss(outputs, sample)
    grads = {}
    if loss.requires_grad:
        loss.backward()
        grads = outputs.grads()
    network.params, state = ad.adam_step(network.params, grads, state, lr)
    return state, report, grads


def train(cfg=None, network=None, progress=None):
    """Round-robin multi-task training, deterministic for a given config."""
    cfg = cfg or TrainConfig()
    if network is None:
        network = build_network(NetworkConfig(base_channels=cfg.base_channels), cfg.seed)
    state = ad.adam_init(network.params)
    cycle = cfg.cycle()
    curves = []
    for step in range(cfg.steps):
        task = cycle[step % len(cycle)]
        sample = synth_sample(task, sample_seed(cfg.seed, step), cfg.sample_size)
        state, report, grads = train_step(network, sample, state, cfg.lr)
        for g in grads.values():
            if not np.isfinite(g).all():
                raise FloatingPointError(f"non-finite gradient at step {step} ({task})")
        for term, value in report.terms.items():
            curves.append((step, task, term, value))
        curves.append((step, task, "total", report.total))
        if progress is not None:
            progress(step, report)
    return TrainResult(network, curves)


def smoothed(values, window=20):
    """Trailing moving average; the first entry averages the first window."""
    v = np.asarray(values, dtype=np.float64)
    if len(v) < window:
        return v
    return np.convolve(v, np.ones(window) / window, mode="valid")


def heldout_line_error(network, n=8, seed=10_000, size=64):
    """Mean background-line masked L1 (distance <= 13 band) over fresh samples."""
    errs = []
    for i in range(n):
        s = synth_sample("bgline", sample_seed(seed, i), size)
        pred = network.forward(s.image, s.guidance).bgline_os1.data[0]
        res = masked_l1(pred, s.bl, loss_region_mask(s.distance, LINE_BAND))
        if not res.empty:
            errs.append(res.value)
    return float(np.mean(errs))
