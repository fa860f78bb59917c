"""Toy U-shaped matting network with auxiliary heads and the IGDR warp.

Encoder: one 3x3 conv per stage, strides 1, 2, 2, 2, 2, 2 (OS1 to OS32).
Decoder: upsample, concatenate the encoder skip, 3x3 conv, back to OS1.
The OS8 decoder feature is the matting representation ``Ma``. The IGDR block
predicts per-pixel offsets from ``Ma`` and the OS32 feature, warps ``Ma``
into ``Se`` for the segmentation head, and feeds ``IN = Ma - Se`` into the
OS4 and OS1 decoder stages.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad

ENCODER_MULT = (1, 2, 4, 8, 8, 12)
ENCODER_STRIDES = (1, 2, 4, 8, 16, 32)


@dataclass
class NetworkConfig:
    base_channels: int = 8
    in_channels: int = 4
    matting_strides: tuple = (8, 4, 1)
    seg_stride: int = 8
    edge_stride: int = 1
    bgline_stride: int = 1

    def encoder_channels(self):
        return [self.base_channels * m for m in ENCODER_MULT]

    def decoder_channels(self):
        b = self.base_channels
        return {16: 8 * b, 8: 4 * b, 4: 2 * b, 2: 2 * b, 1: 2 * b}


@dataclass
class NetworkOutputs:
    alpha_os8: ad.Tensor
    alpha_os4: ad.Tensor
    alpha_os1: ad.Tensor
    seg_os8: ad.Tensor
    edge_os1: ad.Tensor
    bgline_os1: ad.Tensor
    igdr: dict
    leaves: dict = field(default_factory=dict, repr=False)

    def alphas(self):
        return {8: self.alpha_os8, 4: self.alpha_os4, 1: self.alpha_os1}

    def grads(self):
        return {k: t.grad for k, t in self.leaves.items() if t.grad is not None}


def _conv_shapes(cfg):
    """Ordered ``name -> (cout, cin, k)`` for every convolution."""
    enc = cfg.encoder_channels()
    dec = cfg.decoder_channels()
    ma = dec[8]
    shapes = {}
    cin = cfg.in_channels
    for i, c in enumerate(enc):
        shapes[f"enc{i}"] = (c, cin, 3)
        cin = c
    shapes["dec16"] = (dec[16], enc[5] + enc[4], 3)
    shapes["dec8"] = (ma, dec[16] + enc[3], 3)
    shapes["igdr_offset"] = (2, ma + enc[5], 3)
    shapes["dec4"] = (dec[4], ma + enc[2] + ma, 3)
    shapes["dec2"] = (dec[2], dec[4] + enc[1], 3)
    shapes["dec1"] = (dec[1], dec[2] + enc[0] + ma, 3)
    for s in cfg.matting_strides:
        shapes[f"alpha{s}"] = (1, dec[s], 3)
    shapes[f"seg{cfg.seg_stride}.hidden"] = (dec[cfg.seg_stride], dec[cfg.seg_stride], 3)
    shapes[f"seg{cfg.seg_stride}"] = (1, dec[cfg.seg_stride], 3)
    shapes[f"edge{cfg.edge_stride}.hidden"] = (dec[cfg.edge_stride], dec[cfg.edge_stride], 3)
    shapes[f"edge{cfg.edge_stride}"] = (1, dec[cfg.edge_stride], 3)
    shapes[f"bgline{cfg.bgline_stride}"] = (1, dec[cfg.bgline_stride], 3)
    return shapes


def parameter_count(cfg):
    return sum(co * ci * k * k + co for co, ci, k in _conv_shapes(cfg).values())


def param_checksum(params):
    h = hashlib.sha256()
    for name in sorted(params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(params[name], dtype="<f4").tobytes())
    return h.hexdigest()


def igdr_forward(ma, feat_os32, offset_weight, offset_bias, taps=None):
    """Offsets from ``[Ma, up(OS32)]``, warp ``Ma`` into ``Se``, ``IN = Ma - Se``.

    Returns ``(Se, IN, offsets, fused)``; ``fused`` is what the shallower
    decoder stages receive, i.e. ``IN`` itself.
    """
    taps = taps or {}
    _, h, w = ma.shape
    context = ad.resize_bilinear(feat_os32, h, w)
    offsets = ad.conv2d(ad.concat_channels(ma, context), offset_weight, offset_bias, pad=1)
    if "offsets" in taps:
        offsets = taps["offsets"](offsets)
    se = ad.warp_with_offsets(ma, offsets)
    inconsistency = ad.sub(ma, se)
    return se, inconsistency, offsets, inconsistency


def route_heads(se, ma):
    """Matting path keeps ``Ma``; the segmentation head reads ``Se``."""
    return ma, se


class Network:
    def __init__(self, cfg, params):
        self.cfg = cfg
        self.params = params

    @classmethod
    def from_params(cls, params):
        """Rebuild from a parameter dict, inferring the base width."""
        base = params["enc0.weight"].shape[0]
        cfg = NetworkConfig(base_channels=base, in_channels=params["enc0.weight"].shape[1])
        return cls(cfg, params)

    def forward(self, image, guidance, taps=None):
        """Run on one ``(H, W, 3)`` image and ``(H, W)`` guidance mask.

        ``taps`` maps ``"Ma"``, ``"offsets"`` or ``"Se"`` to a function that
        may replace that intermediate tensor (used for probing the wiring).
        """
        taps = taps or {}
        cfg = self.cfg
        leaves = {k: ad.Tensor(v, requires_grad=True) for k, v in self.params.items()}
        dtype = next(iter(self.params.values())).dtype

        def conv(name, x, stride=1):
            return ad.conv2d(x, leaves[f"{name}.weight"], leaves[f"{name}.bias"], stride=stride, pad=1)

        def up_to(x, ref):
            return ad.resize_bilinear(x, ref.shape[1], ref.shape[2])

        img = np.asarray(image, dtype=dtype).transpose(2, 0, 1)
        g = np.asarray(guidance, dtype=dtype)[None]
        # inputs mapped from [0, 1] to [-2, 2]
        x = ad.Tensor((np.concatenate([img, g], axis=0) - 0.5) * 4)

        enc = []
        for i, stride in enumerate(ENCODER_STRIDES):
            x = ad.relu(conv(f"enc{i}", x, stride=1 if i == 0 else 2))
            enc.append(x)
        e0, e1, e2, e3, e4, e5 = enc

        d16 = ad.relu(conv("dec16", ad.concat_channels(up_to(e5, e4), e4)))
        ma = ad.relu(conv("dec8", ad.concat_channels(up_to(d16, e3), e3)))
        if "Ma" in taps:
            ma = taps["Ma"](ma)
        se, inc, offsets, fused = igdr_forward(ma, e5, leaves["igdr_offset.weight"],
                                               leaves["igdr_offset.bias"], taps)
        if "Se" in taps:
            se = taps["Se"](se)
        to_matting, to_seg = route_heads(se, ma)

        d4 = ad.relu(conv("dec4", ad.concat_channels(up_to(to_matting, e2), e2, up_to(fused, e2))))
        d2 = ad.relu(conv("dec2", ad.concat_channels(up_to(d4, e1), e1)))
        d1 = ad.relu(conv("dec1", ad.concat_channels(up_to(d2, e0), e0, up_to(fused, e0))))

        feats = {8: to_matting, 4: d4, 2: d2, 1: d1}
        seg_feats = dict(feats)
        seg_feats[8] = to_seg
        alphas = {s: ad.sigmoid(conv(f"alpha{s}", feats[s])) for s in cfg.matting_strides}
        return NetworkOutputs(
            alpha_os8=alphas.get(8),
            alpha_os4=alphas.get(4),
            alpha_os1=alphas.get(1),
            seg_os8=conv(f"seg{cfg.seg_stride}",
                         ad.relu(conv(f"seg{cfg.seg_stride}.hidden", seg_feats[cfg.seg_stride]))),
            edge_os1=conv(f"edge{cfg.edge_stride}",
                          ad.relu(conv(f"edge{cfg.edge_stride}.hidden", feats[cfg.edge_stride]))),
            bgline_os1=ad.sigmoid(conv(f"bgline{cfg.bgline_stride}", feats[cfg.bgline_stride])),
            igdr={"Se": se, "IN": inc, "offsets": offsets, "Ma": ma},
            leaves=leaves,
        )

    def predict_alpha(self, image, guidance):
        """Final matte (OS1 head) as an ``(H, W)`` array."""
        return self.forward(image, guidance).alpha_os1.data[0]


def build_network(cfg=None, seed=0):
    """Fresh network; weights and biases ~ U(-s, s), ``s = 1/sqrt(fan_in)``."""
    cfg = cfg or NetworkConfig()
    rng = np.random.default_rng(seed)
    params = {}
    for name, (co, ci, k) in _conv_shapes(cfg).items():
        s = 1.0 / np.sqrt(ci * k * k)
        params[f"{name}.weight"] = rng.uniform(-s, s, size=(co, ci, k, k)).astype(np.float32)
        params[f"{name}.bias"] = rng.uniform(-s, s, size=(co,)).astype(np.float32)
    return Network(cfg, params)
