import filecmp
import os

import numpy as np
import pytest

from ddcv.cli import main
from ddcv.core import ScalarMap
from ddcv.imgio import read_map, read_pfm, write_pfm


def write_affine_pair(tmp_path, H=32, W=32, seed=0, prefix=""):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(1, 40, (H, W)).astype(np.float32).astype(np.float64)
    D = ScalarMap(vals)
    Dt = ScalarMap(2.0 * vals + 3.0)
    dp, tp = str(tmp_path / f"{prefix}d.pfm"), str(tmp_path / f"{prefix}t.pfm")
    write_pfm(D, dp)
    write_pfm(Dt, tp)
    return dp, tp, D, Dt


class TestConfidenceCmd:
    def test_affine_pair_reports_unit_confidence(self, tmp_path, capsys):
        dp, tp, _, _ = write_affine_pair(tmp_path)
        out = str(tmp_path / "c.pfm")
        code = main(["confidence", "--disparity", dp, "--depth", tp, "--out", out])
        assert code == 0
        assert "mean_confidence 1.000000" in capsys.readouterr().out
        C = read_pfm(out)
        assert (C.values == 1.0).all()

    def test_color_output(self, tmp_path):
        dp, tp, _, _ = write_affine_pair(tmp_path)
        out = str(tmp_path / "c.pfm")
        png = str(tmp_path / "c.png")
        assert main(["confidence", "--disparity", dp, "--depth", tp,
                     "--out", out, "--color-out", png]) == 0
        assert os.path.exists(png)

    def test_mismatched_sizes_exit_2(self, tmp_path):
        dp, _, _, _ = write_affine_pair(tmp_path, H=16, W=16, prefix="a-")
        _, tp, _, _ = write_affine_pair(tmp_path, H=8, W=8, seed=1, prefix="b-")
        assert main(["confidence", "--disparity", dp, "--depth", tp,
                     "--out", str(tmp_path / "c.pfm")]) == 2

    def test_constant_disparity_exit_3(self, tmp_path, capsys):
        dp = str(tmp_path / "const.pfm")
        write_pfm(ScalarMap(np.full((16, 16), 5.0)), dp)
        tp = str(tmp_path / "t.pfm")
        write_pfm(ScalarMap(np.arange(256.0).reshape(16, 16)), tp)
        assert main(["confidence", "--disparity", dp, "--depth", tp,
                     "--out", str(tmp_path / "c.pfm")]) == 3
        assert "degenerate" in capsys.readouterr().err

    def test_idempotent_output(self, tmp_path):
        dp, tp, _, _ = write_affine_pair(tmp_path)
        a, b = str(tmp_path / "a.pfm"), str(tmp_path / "b.pfm")
        main(["confidence", "--disparity", dp, "--depth", tp, "--out", a])
        main(["confidence", "--disparity", dp, "--depth", tp, "--out", b])
        assert filecmp.cmp(a, b, shallow=False)

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["confidence", "--disparity", str(tmp_path / "nope.pfm"),
                     "--depth", str(tmp_path / "nope2.pfm"),
                     "--out", str(tmp_path / "c.pfm")]) == 2


@pytest.fixture()
def scene_dir(tmp_path):
    out = str(tmp_path / "scene")
    assert main(["synth", "--out-dir", out, "--gx", "0", "--gy", "1",
                 "--d0", "8", "--seed", "2"]) == 0
    return out


class TestLossCmd:
    def test_fixed_point_scene(self, scene_dir, tmp_path, capsys):
        code = main(["loss",
                     "--left", f"{scene_dir}/left.png",
                     "--right", f"{scene_dir}/right.png",
                     "--disparity", f"{scene_dir}/disp_gt.pfm",
                     "--right-disparity", f"{scene_dir}/disp_right.pfm",
                     "--depth", f"{scene_dir}/depth.pfm"])
        assert code == 0
        out = capsys.readouterr().out
        rows = dict(line.split(",") for line in out.strip().split("\n")[1:])
        assert float(rows["photometric"]) < 1e-6
        assert float(rows["lrc"]) == 0.0
        assert float(rows["ldr"]) == 0.0

    def test_zero_weights_total_is_photometric(self, scene_dir, capsys):
        code = main(["loss",
                     "--left", f"{scene_dir}/left.png",
                     "--right", f"{scene_dir}/right.png",
                     "--disparity", f"{scene_dir}/disp_gt.pfm",
                     "--lambda1", "0", "--lambda2", "0", "--lambda3", "0"])
        assert code == 0
        rows = dict(line.split(",") for line in capsys.readouterr().out.strip().split("\n")[1:])
        assert rows["total"] == rows["photometric"]

    def test_missing_depth_with_ldr_weight_exit_2(self, scene_dir):
        assert main(["loss",
                     "--left", f"{scene_dir}/left.png",
                     "--right", f"{scene_dir}/right.png",
                     "--disparity", f"{scene_dir}/disp_gt.pfm",
                     "--right-disparity", f"{scene_dir}/disp_right.pfm"]) == 2

    def test_gradient_output(self, scene_dir, tmp_path):
        gout = str(tmp_path / "grad.pfm")
        code = main(["loss",
                     "--left", f"{scene_dir}/left.png",
                     "--right", f"{scene_dir}/right.png",
                     "--disparity", f"{scene_dir}/disp_est.pfm",
                     "--right-disparity", f"{scene_dir}/disp_right.pfm",
                     "--depth", f"{scene_dir}/depth.pfm",
                     "--grad-out", gout])
        assert code == 0
        g = read_pfm(gout)
        assert g.shape == (128, 128)


class TestEvalCmd:
    def test_perfect_estimate_all_zero(self, scene_dir, capsys):
        code = main(["eval-disp", "--est", f"{scene_dir}/disp_gt.pfm",
                     "--gt", f"{scene_dir}/disp_gt.pfm"])
        assert code == 0
        rows = dict(line.split(",") for line in capsys.readouterr().out.strip().split("\n")[1:])
        assert all(float(v) == 0.0 for v in rows.values())

    def test_pep_rows_non_increasing(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        est = ScalarMap(rng.uniform(0, 20, (16, 16)))
        gt = ScalarMap(rng.uniform(0, 20, (16, 16)))
        ep, gp = str(tmp_path / "e.pfm"), str(tmp_path / "g.pfm")
        write_pfm(est, ep)
        write_pfm(gt, gp)
        assert main(["eval-disp", "--est", ep, "--gt", gp, "--deltas", "1,2,3"]) == 0
        rows = [line.split(",") for line in capsys.readouterr().out.strip().split("\n")[1:]]
        peps = [float(v) for k, v in rows if k.startswith("pep-")]
        assert len(peps) == 3
        assert all(a >= b for a, b in zip(peps, peps[1:]))


class TestSparsifyCmd:
    def test_perfect_confidence_matches_optimal(self, tmp_path, capsys):
        rng = np.random.default_rng(4)
        est = ScalarMap(rng.uniform(0, 20, (16, 16)))
        gt = ScalarMap(rng.uniform(0, 20, (16, 16)))
        conf = ScalarMap(-np.abs(est.values - gt.values))
        ep, gp, cp = (str(tmp_path / n) for n in ("e.pfm", "g.pfm", "c.pfm"))
        write_pfm(est, ep)
        write_pfm(gt, gp)
        write_pfm(conf, cp)
        assert main(["sparsify", "--est", ep, "--gt", gp, "--confidence", cp,
                     "--steps", "50"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        summary = dict(line.split(",") for line in lines[-2:])
        auc, best = float(summary["auc"]), float(summary["optimal_auc"])
        assert abs(auc - best) <= 1e-12 * max(1.0, best)

    def test_steps_one_exit_2(self, tmp_path):
        ep = str(tmp_path / "e.pfm")
        write_pfm(ScalarMap(np.ones((4, 4))), ep)
        assert main(["sparsify", "--est", ep, "--gt", ep, "--confidence", ep,
                     "--steps", "1"]) == 2


class TestSynthCmd:
    def test_byte_identical_for_fixed_seed(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (a, b):
            assert main(["synth", "--out-dir", out, "--seed", "9",
                         "--corruption", "salt"]) == 0
        for name in os.listdir(a):
            assert filecmp.cmp(os.path.join(a, name), os.path.join(b, name),
                               shallow=False), name

    def test_no_corruption_manifest(self, tmp_path, capsys):
        out = str(tmp_path / "s")
        assert main(["synth", "--out-dir", out, "--corruption", "none"]) == 0
        manifest = open(os.path.join(out, "manifest.csv")).read()
        assert "corrupted_pixels,0" in manifest

    def test_bad_layout_exit_2(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            main(["synth", "--out-dir", str(tmp_path / "x"), "--layout", "bogus"])
        assert e.value.code == 2

    def test_mask_round_trips(self, tmp_path):
        out = str(tmp_path / "m")
        assert main(["synth", "--out-dir", out, "--corruption", "salt",
                     "--salt-fraction", "0.05"]) == 0
        mask = read_map(os.path.join(out, "corruption_mask.pfm"))
        assert int(mask.values.sum()) == round(0.05 * 128 * 128)


class TestGradcheckCmd:
    def test_default_run_passes(self, capsys):
        assert main(["gradcheck", "--size", "16", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert out.count("pass") == 6 and "FAIL" not in out
