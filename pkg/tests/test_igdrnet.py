import math

import numpy as np
import pytest

from auxmatting import autodiff as ad
from auxmatting.compositor import edge_from_mask
from auxmatting.igdrnet import (BGLINE, MATTING, SEG, TASKS, NetworkConfig, NetworkOutputs, TrainConfig,
                                build_network, igdr_forward, param_checksum, parameter_count, route_heads,
                                sample_seed, smoothed, synth_sample, task_loss, train, train_step)
from auxmatting.igdrnet.data import SampleBundle
from auxmatting.pseudogt import SupervisionMap


@pytest.fixture(scope="module")
def net():
    return build_network(NetworkConfig(), seed=0)


def sample_inputs(size=32, seed=0):
    rng = np.random.default_rng(seed)
    return rng.random((size, size, 3)).astype(np.float32), (rng.random((size, size)) < 0.5).astype(np.float32)


def test_parameter_count_closed_form():
    b = 8
    convs = [  # (out, in) of every 3x3 conv for base width b
        (b, 4), (2 * b, b), (4 * b, 2 * b), (8 * b, 4 * b), (8 * b, 8 * b), (12 * b, 8 * b),
        (8 * b, 12 * b + 8 * b), (4 * b, 8 * b + 8 * b), (2, 4 * b + 12 * b),
        (2 * b, 4 * b + 4 * b + 4 * b), (2 * b, 2 * b + 2 * b), (2 * b, 2 * b + b + 4 * b),
        (1, 4 * b), (1, 2 * b), (1, 2 * b),
        (4 * b, 4 * b), (1, 4 * b),
        (2 * b, 2 * b), (1, 2 * b),
        (1, 2 * b),
    ]
    expected = sum(o * i * 9 + o for o, i in convs)
    assert parameter_count(NetworkConfig()) == expected
    params = build_network(NetworkConfig(), 0).params
    assert sum(v.size for v in params.values()) == expected


def test_build_deterministic_and_init_range():
    a, b = build_network(seed=3), build_network(seed=3)
    assert param_checksum(a.params) == param_checksum(b.params)
    assert param_checksum(a.params) != param_checksum(build_network(seed=4).params)
    w = a.params["dec8.weight"]
    assert np.abs(w).max() <= 1 / math.sqrt(w.shape[1] * 9)


def test_output_shapes_and_ranges(net):
    out = net.forward(*sample_inputs(32))
    assert out.seg_os8.shape == (1, 4, 4)
    assert out.alpha_os8.shape == (1, 4, 4) and out.alpha_os4.shape == (1, 8, 8)
    for t in (out.alpha_os1, out.edge_os1, out.bgline_os1):
        assert t.shape == (1, 32, 32)
    for t in (out.alpha_os8, out.alpha_os4, out.alpha_os1, out.bgline_os1):
        assert ((t.data > 0) & (t.data < 1)).all()
    assert np.isfinite(out.seg_os8.data).all() and np.isfinite(out.edge_os1.data).all()
    assert out.igdr["offsets"].shape == (2, 4, 4)


def test_igdr_zero_offsets():
    rng = np.random.default_rng(0)
    ma = ad.Tensor(rng.random((6, 4, 4)).astype(np.float32))
    f32 = ad.Tensor(rng.random((5, 1, 1)).astype(np.float32))
    se, inc, off, fused = igdr_forward(ma, f32, np.zeros((2, 11, 3, 3), np.float32), np.zeros(2, np.float32))
    assert (off.data == 0).all()
    assert se.data.tobytes() == ma.data.tobytes()
    assert (inc.data == 0).all() and fused is inc


def test_igdr_ramp_shift():
    ramp = ad.Tensor(np.tile(np.arange(8.0) * 0.5, (2, 6, 1)))
    f32 = ad.Tensor(np.zeros((3, 1, 1)))
    bias = np.array([1.0, 0.0])
    _, inc, _, _ = igdr_forward(ramp, f32, np.zeros((2, 5, 3, 3)), bias)
    np.testing.assert_allclose(inc.data[:, :, :-1], -0.5)


def test_igdr_offset_conv_receives_gradient():
    rng = np.random.default_rng(1)
    ma = ad.Tensor(rng.random((4, 6, 6)))
    f32 = ad.Tensor(rng.random((3, 2, 2)))
    w = ad.parameter(rng.standard_normal((2, 7, 3, 3)) * 0.1)
    b = ad.parameter(np.full(2, 0.3))
    _, inc, _, _ = igdr_forward(ma, f32, w, b)
    ad.mean(ad.absolute(inc)).backward()
    assert np.abs(w.grad).sum() > 0
    params = {"w": w.data}
    new, _ = ad.adam_step(params, {"w": w.grad}, ad.adam_init(params), 1e-3)
    assert not np.array_equal(new["w"], w.data)


def test_route_heads():
    a, b = object(), object()
    assert route_heads(a, b) == (b, a)


def _has_op(node, op):
    return any(n.op == op for n in ad.ancestors(node))


def test_wiring_ancestry(net):
    out = net.forward(*sample_inputs(32))
    assert _has_op(out.seg_os8, "warp_with_offsets")
    assert not _has_op(out.alpha_os8, "warp_with_offsets")
    # the shallower heads see the warp only through IN
    se = out.igdr["Se"]
    assert any(n is se for n in ad.ancestors(out.alpha_os1))


def test_zeroing_se_and_ma(net):
    img, g = sample_inputs(32, 1)
    base = net.forward(img, g)
    zero = lambda t: ad.mul(t, 0.0)
    no_se = net.forward(img, g, taps={"Se": zero})
    np.testing.assert_array_equal(no_se.alpha_os8.data, base.alpha_os8.data)
    assert not np.array_equal(no_se.seg_os8.data, base.seg_os8.data)
    no_ma = net.forward(img, g, taps={"Ma": zero})
    assert not np.array_equal(no_ma.alpha_os8.data, base.alpha_os8.data)
    assert not np.array_equal(no_ma.seg_os8.data, base.seg_os8.data)


def _fake_outputs(**kw):
    fill = {k: None for k in ("alpha_os8", "alpha_os4", "alpha_os1", "seg_os8", "edge_os1", "bgline_os1")}
    fill.update(kw)
    return NetworkOutputs(igdr={}, **fill)


def test_matting_loss_zero_on_perfect_prediction():
    s = synth_sample(MATTING, 3, size=32)
    from auxmatting.imgcore import resize_bilinear
    outs = {f"alpha_os{k}": ad.Tensor(resize_bilinear(s.alpha, 32 // k, 32 // k)[None]) for k in (8, 4, 1)}
    loss, report = task_loss(_fake_outputs(**outs), s)
    assert loss.item() == pytest.approx(0.0, abs=1e-7)
    assert set(report.terms) == {f"{t}_os{k}" for t in ("l1", "lap") for k in (1, 4, 8)}


def test_seg_loss_hand_computed():
    seg = np.array([[0, 0, 1, 1]] * 4, dtype=np.float32)
    edge = np.array([[0, 1, 1, 0]] * 4, dtype=np.float32)
    rng = np.random.default_rng(2)
    seg_logits, edge_logits = rng.standard_normal((1, 4, 4)), rng.standard_normal((1, 4, 4))
    sample = SampleBundle(np.zeros((4, 4, 3), np.float32), np.zeros((4, 4), np.float32), SEG, seg=seg, edge=edge)
    loss, report = task_loss(_fake_outputs(seg_os8=ad.Tensor(seg_logits), edge_os1=ad.Tensor(edge_logits)), sample)

    def ce(x, t):
        p = 1 / (1 + math.exp(-x))
        return -(t * math.log(p) + (1 - t) * math.log(1 - p))

    bce = sum(ce(seg_logits[0].flat[i], seg.flat[i]) for i in range(16)) / 16
    wce = sum((0.5 if edge.flat[i] else 0.5) * ce(edge_logits[0].flat[i], edge.flat[i]) for i in range(16)) / 16
    assert report.terms["seg_bce"] == pytest.approx(bce, abs=1e-6)
    assert report.terms["edge_wce"] == pytest.approx(wce, abs=1e-6)
    assert loss.item() == pytest.approx(bce + wce, abs=1e-6)


def test_bgline_loss_empty_line_support():
    h = 16
    alpha = np.zeros((h, h), np.float32)
    distance = np.full((h, h), 20.0)
    distance[:, :2] = 2.0  # matte band only, outside the line band would need d <= 13
    distance[:, 2:] = 30.0
    bl = SupervisionMap(np.zeros((h, h), np.float32), np.zeros((h, h), np.float32))
    s = SampleBundle(np.zeros((h, h, 3), np.float32), np.zeros((h, h), np.float32), BGLINE,
                     alpha=alpha, bl=bl, distance=distance)
    pred = ad.Tensor(np.full((1, h, h), 0.25, np.float32))
    loss, report = task_loss(_fake_outputs(alpha_os1=pred, bgline_os1=pred), s)
    assert "line_l1:empty-support" in report.flags
    assert report.terms["line_l1"] == 0
    assert loss.item() == pytest.approx(report.terms["matte_l1"]) == pytest.approx(0.25)


@pytest.mark.parametrize("task", TASKS)
def test_synth_sample_contract(task):
    for seed in range(3):
        s = synth_sample(task, seed, size=48)
        s.validate()
        t = synth_sample(task, seed, size=48)
        for name in ("image", "guidance", "alpha", "seg", "edge", "distance"):
            a, b = getattr(s, name), getattr(t, name)
            assert (a is None and b is None) or a.tobytes() == b.tobytes()
    if task == SEG:
        assert np.isin(s.seg, (0, 1)).all()
        np.testing.assert_array_equal(s.edge, edge_from_mask(s.seg))
    if task == BGLINE:
        opaque = s.alpha >= 1 - 1e-6
        assert (s.bl.values[opaque] == 0).all() and (s.bl.valid[opaque] == 1).all()
    if task == MATTING:
        assert ((s.alpha > 0) & (s.alpha < 1)).any()


def test_synth_rejects_unknown_task():
    with pytest.raises(ValueError):
        synth_sample("depth", 0)


def test_sample_seed_independent():
    assert sample_seed(0, 1) != sample_seed(0, 2) != sample_seed(1, 1)
    assert sample_seed(5, 5) == sample_seed(5, 5)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_train_step_grads_finite(seed):
    net = build_network(seed=seed)
    state = ad.adam_init(net.params)
    for task in TASKS:
        state, report, grads = train_step(net, synth_sample(task, seed, 64), state, 1e-3)
        assert grads or len(report.flags) == 2
        assert all(np.isfinite(g).all() for g in grads.values())
        assert np.isfinite(report.total)


def test_train_zero_steps_and_determinism():
    cfg = TrainConfig(steps=0, sample_size=32)
    net = build_network(seed=0)
    before = param_checksum(net.params)
    assert param_checksum(train(cfg, network=net).network.params) == before
    cfg = TrainConfig(steps=4, sample_size=32, seed=2)
    a, b = train(cfg), train(cfg)
    assert param_checksum(a.network.params) == param_checksum(b.network.params)
    assert a.curves == b.curves
    assert [t for _, t, term, _ in a.curves if term == "total"] == ["matting", "seg", "bgline", "matting"]


def test_train_config_json_and_schedule():
    cfg = TrainConfig(steps=7, schedule={"matting": 2, "seg": 1, "bgline": 0})
    back = TrainConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.cycle() == ["matting", "matting", "seg"]
    with pytest.raises(ValueError):
        TrainConfig.from_json('{"steps": 3, "momentum": 0.9}')
    with pytest.raises(ValueError):
        TrainConfig(schedule={"matting": 0}).cycle()


def test_curves_csv(tmp_path):
    res = train(TrainConfig(steps=2, sample_size=32))
    path = tmp_path / "c.csv"
    res.write_curves(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,task,term,value"
    assert len(lines) == 1 + len(res.curves)


def test_smoothed():
    v = np.arange(25.0)
    s = smoothed(v, 20)
    assert len(s) == 6 and s[0] == pytest.approx(9.5)
