import json
import subprocess
import sys

import numpy as np
import pytest

from auxmatting import linedet
from auxmatting.autodiff import load_checkpoint
from auxmatting.cli import main
from auxmatting.compositor import composite, make_guidance
from auxmatting.imgcore import read_field, read_png, write_field, write_png
from auxmatting.pseudogt import SupervisionMap, background_line_gt


@pytest.fixture
def scene(tmp_path):
    rng = np.random.default_rng(0)
    fg, bg = rng.random((40, 40, 3)), rng.random((40, 40, 3))
    yy, xx = np.mgrid[:40, :40]
    alpha = np.clip(1.3 - np.hypot(yy - 20, xx - 20) / 10, 0, 1)
    for name, arr in (("fg", fg), ("bg", bg), ("alpha", alpha)):
        write_png(tmp_path / f"{name}.png", arr)
    return tmp_path


def test_composite_alpha_one_is_fg_bytes(scene):
    write_png(scene / "ones.png", np.ones((40, 40)))
    assert main(["composite", "--fg", str(scene / "fg.png"), "--bg", str(scene / "bg.png"),
                 "--alpha", str(scene / "ones.png"), "--out", str(scene / "out.png")]) == 0
    assert (scene / "out.png").read_bytes() == (scene / "fg.png").read_bytes()


def test_chain_matches_in_process(scene):
    t = scene
    assert main(["composite", "--fg", str(t / "fg.png"), "--bg", str(t / "bg.png"),
                 "--alpha", str(t / "alpha.png"), "--out", str(t / "img.png")]) == 0
    assert main(["guidance", "--alpha", str(t / "alpha.png"), "--erode", "5", "--out", str(t / "g.png")]) == 0
    d = linedet.distance_field([linedet.LineSegment(0, 10, 39, 30)], 40, 40)
    write_field(t / "d.fld", d)
    assert main(["pseudogt", "--distance", str(t / "d.fld"), "--alpha", str(t / "alpha.png"),
                 "--out-bl", str(t / "bl.fld")]) == 0

    F, B, A = read_png(t / "fg.png"), read_png(t / "bg.png"), read_png(t / "alpha.png")
    img = composite(F, B, A)
    write_png(t / "ref.png", img)
    assert (t / "img.png").read_bytes() == (t / "ref.png").read_bytes()
    np.testing.assert_array_equal(read_png(t / "g.png"), make_guidance(A, 0.95, 5))
    ref = background_line_gt(linedet.line_activation(read_field(t / "d.fld")), A)
    got = SupervisionMap.from_stacked(read_field(t / "bl.fld"))
    assert read_field(t / "bl.fld").shape == (40, 40, 2)
    np.testing.assert_array_equal(got.values, ref.values)
    np.testing.assert_array_equal(got.valid, ref.valid)


def test_lsd_and_homoadapt(tmp_path):
    cover = linedet.render_segments((64, 64), [linedet.LineSegment(10, 10, 50, 40)], width=2.0)
    write_png(tmp_path / "s.png", 0.9 - 0.7 * cover)
    assert main(["lsd", "--image", str(tmp_path / "s.png"), "--out-segments", str(tmp_path / "s.json")]) == 0
    segs = json.loads((tmp_path / "s.json").read_text())
    assert len(segs) == 1 and set(segs[0]) == {"x1", "y1", "x2", "y2"}
    assert main(["homoadapt", "--image", str(tmp_path / "s.png"), "--n", "3", "--seed", "4",
                 "--out-distance", str(tmp_path / "d.fld")]) == 0
    ref = linedet.homography_adaptation(read_png(tmp_path / "s.png"), n=3, seed=4)
    np.testing.assert_array_equal(read_field(tmp_path / "d.fld"), ref.astype(np.float32))


def test_synth_train_infer_eval(tmp_path):
    assert main(["synth", "--task", "matting", "--n", "2", "--seed", "1", "--size", "32",
                 "--out-dir", str(tmp_path / "s")]) == 0
    assert sorted(p.name for p in (tmp_path / "s").iterdir()) == [
        "0000_alpha.png", "0000_guidance.png", "0000_image.png",
        "0001_alpha.png", "0001_guidance.png", "0001_image.png"]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 3, "sample_size": 32}))
    assert main(["train", "--config", str(cfg), "--seed", "2", "--out-checkpoint", str(tmp_path / "m.ckpt"),
                 "--out-curves", str(tmp_path / "c.csv")]) == 0
    assert "enc0.weight" in load_checkpoint(tmp_path / "m.ckpt")
    assert (tmp_path / "c.csv").read_text().startswith("step,task,term,value")
    (tmp_path / "pred").mkdir()
    (tmp_path / "gt").mkdir()
    for i in range(2):
        s = tmp_path / "s" / f"{i:04d}"
        assert main(["infer", "--checkpoint", str(tmp_path / "m.ckpt"), "--image", f"{s}_image.png",
                     "--guidance", f"{s}_guidance.png", "--out-alpha", str(tmp_path / "pred" / f"{i}.png")]) == 0
        write_png(tmp_path / "gt" / f"{i}.png", read_png(f"{s}_alpha.png"))
    assert main(["eval", "--pred-dir", str(tmp_path / "pred"), "--gt-dir", str(tmp_path / "gt"),
                 "--out-report", str(tmp_path / "r.json")]) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["count"] == 2 and rep["aggregate"]["whole"]["sad"] > 0
    assert main(["eval", "--pred-dir", str(tmp_path / "pred"), "--gt-dir", str(tmp_path / "gt"),
                 "--max-sad", "0"]) == 3


def test_eval_identity_zero_report(tmp_path, capsys):
    (tmp_path / "gt").mkdir()
    write_png(tmp_path / "gt" / "x.png", np.random.default_rng(1).random((16, 16)))
    assert main(["eval", "--pred-dir", str(tmp_path / "gt"), "--gt-dir", str(tmp_path / "gt"),
                 "--out-report", str(tmp_path / "r.json")]) == 0
    text = (tmp_path / "r.json").read_text()
    rep = json.loads(text)
    assert all(v == 0 for part in rep["aggregate"].values() for v in part.values())
    assert text == json.dumps(rep, sort_keys=True, indent=2) + "\n"
    assert "Whole Image" in capsys.readouterr().out


def test_gradcheck_subset(capsys):
    assert main(["gradcheck", "--op", "warp_with_offsets", "--seeds", "1"]) == 0
    assert "warp_with_offsets" in capsys.readouterr().out
    assert main(["gradcheck", "--op", "nonsense"]) == 1


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["bogus"]) == 1
    assert main(["composite", "--fg", "a.png"]) == 1
    assert main(["synth", "--task", "depth", "--out-dir", "x"]) == 1
    assert "invalid choice" in capsys.readouterr().err


def test_io_errors_leave_no_output(tmp_path, capsys):
    out = tmp_path / "o.png"
    assert main(["composite", "--fg", str(tmp_path / "none.png"), "--bg", "b", "--alpha", "a",
                 "--out", str(out)]) == 2
    assert not out.exists()
    write_png(tmp_path / "a.png", np.zeros((8, 8)))
    write_field(tmp_path / "d.fld", np.zeros((9, 9)))
    assert main(["pseudogt", "--distance", str(tmp_path / "d.fld"), "--alpha", str(tmp_path / "a.png"),
                 "--out-bl", str(tmp_path / "bl.fld")]) == 2
    assert not (tmp_path / "bl.fld").exists()
    (tmp_path / "junk.fld").write_bytes(b"nonsense")
    assert main(["pseudogt", "--distance", str(tmp_path / "junk.fld"), "--alpha", str(tmp_path / "a.png"),
                 "--out-bl", str(tmp_path / "bl.fld")]) == 2
    assert sum(line.startswith("error:") for line in capsys.readouterr().err.splitlines()) == 3
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.png", "d.fld", "junk.fld"]


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "auxmatting", "gradcheck", "--op", "relu", "--seeds", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "relu" in r.stdout
    r = subprocess.run([sys.executable, "-m", "auxmatting", "frobnicate"], capture_output=True, text=True)
    assert r.returncode == 1 and r.stderr
