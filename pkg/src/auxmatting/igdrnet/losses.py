"""Per-task objectives; their sum over a schedule is the total training loss."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..imgcore import resize_bilinear
from ..pseudogt import LINE_BAND, MATTE_BAND, SupervisionMap, loss_region_mask, support
from .data import BGLINE, MATTING, SEG


@dataclass
class LossReport:
    task: str
    terms: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def total(self):
        return float(sum(self.terms.values()))


def _resized(arr, like):
    _, h, w = like.shape
    return resize_bilinear(np.asarray(arr, dtype=np.float32), h, w)


def matting_loss(outputs, alpha, report):
    total = None
    for stride, pred in sorted(outputs.alphas().items()):
        if pred is None:
            continue
        gt = _resized(alpha, pred)
        l1 = ad.l1_loss(pred, gt)
        lap = ad.laplacian_loss(pred, gt)
        report.terms[f"l1_os{stride}"] = l1.item()
        report.terms[f"lap_os{stride}"] = lap.item()
        term = ad.add(l1, lap)
        total = term if total is None else ad.add(total, term)
    return total


def seg_loss(outputs, seg, edge, report):
    seg_t = ad.bce_loss(outputs.seg_os8, _resized(seg, outputs.seg_os8))
    edge_t = ad.weighted_ce_edge_loss(outputs.edge_os1, edge)
    report.terms["seg_bce"] = seg_t.item()
    report.terms["edge_wce"] = edge_t.item()
    return ad.add(seg_t, edge_t)


def bgline_loss(outputs, bl, alpha, distance, report):
    line_sup = support(bl, loss_region_mask(distance, LINE_BAND))
    line_t, line_empty = ad.masked_l1_loss(outputs.bgline_os1, bl.values, line_sup)
    dense = SupervisionMap.dense(alpha)
    mat_sup = support(dense, loss_region_mask(distance, MATTE_BAND))
    mat_t, mat_empty = ad.masked_l1_loss(outputs.alpha_os1, dense.values, mat_sup)
    report.terms["line_l1"] = line_t.item()
    report.terms["matte_l1"] = mat_t.item()
    if line_empty:
        report.flags.append("line_l1:empty-support")
    if mat_empty:
        report.flags.append("matte_l1:empty-support")
    return ad.add(line_t, mat_t)


def task_loss(outputs, sample):
    """Loss for one sample under its task's supervision; ``(Tensor, LossReport)``."""
    report = LossReport(sample.task)
    if sample.task == MATTING:
        loss = matting_loss(outputs, sample.alpha, report)
    elif sample.task == SEG:
        loss = seg_loss(outputs, sample.seg, sample.edge, report)
    elif sample.task == BGLINE:
        loss = bgline_loss(outputs, sample.bl, sample.alpha, sample.distance, report)
    else:
        raise ValueError(f"unknown task {sample.task!r}")
    return loss, report
