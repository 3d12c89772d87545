import numpy as np
import pytest

from ddcv.core import DegenerateInputError, ImageBuffer, NeighborhoodSpec, ScalarMap
from ddcv.gradcheck import make_instance, run_gradcheck
from ddcv.losses import (
    SSIM_C1,
    LdrParams,
    LossWeights,
    dds_loss,
    hybrid_loss,
    ldr_loss,
    ldr_phi_map,
    lrc_loss,
    photometric_loss,
    select_references,
    smoothness_depth,
    smoothness_image,
    warp_horizontal,
    _nu,
    _omega,
)


def ramp_image(H, W):
    x = np.tile(np.arange(W, dtype=float), (H, 1)) / W
    return ImageBuffer(x)


class TestWarp:
    def test_identity(self):
        img = ramp_image(6, 12)
        warped, vis = warp_horizontal(img, ScalarMap(np.zeros((6, 12))))
        np.testing.assert_array_equal(warped.intensities, img.intensities)
        assert vis.all()

    def test_unit_shift_on_ramp(self):
        H, W = 6, 12
        img = ramp_image(H, W)
        warped, vis = warp_horizontal(img, ScalarMap(np.ones((H, W))))
        x = np.arange(W)
        expected = (x - 1) / W
        for j in range(1, W):
            assert warped.intensities[0, j, 0] == pytest.approx(expected[j], abs=1e-12)
        assert not vis[:, 0].any() and vis[:, 1:].all()

    def test_out_of_view(self):
        D = np.zeros((4, 8))
        D[2, 3] = 5.0  # sample coordinate -2
        _, vis = warp_horizontal(ramp_image(4, 8), ScalarMap(D))
        assert not vis[2, 3]
        assert vis[0, 3]

    def test_negative_disparity_rejected(self):
        with pytest.raises(ValueError):
            warp_horizontal(ramp_image(4, 8), ScalarMap(np.full((4, 8), -1.0)))

    def test_map_warp_propagates_validity(self):
        src = ScalarMap(np.arange(32, dtype=float).reshape(4, 8))
        valid = np.ones((4, 8), bool)
        valid[1, 4] = False
        src = ScalarMap(src.values, valid)
        warped, _ = warp_horizontal(src, ScalarMap(np.full((4, 8), 0.5)))
        # sampling at x - 0.5 touches columns 4 and 5 from x = 5
        assert not warped.valid[1, 5]
        assert not warped.valid[1, 4]
        assert warped.valid[0, 5]


class TestPhotometric:
    def test_perfect_reconstruction(self):
        rng = np.random.default_rng(0)
        img = ImageBuffer(rng.uniform(0, 1, (12, 12)))
        value, grad = photometric_loss(img, img, ScalarMap(np.zeros((12, 12))))
        assert value == 0.0
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_l1_part_at_max_gap(self):
        H, W = 12, 12
        IL = ImageBuffer(np.zeros((H, W)))
        IR = ImageBuffer(np.ones((H, W)))
        interior = np.zeros((H, W), bool)
        interior[2:-2, 2:-2] = True
        D = ScalarMap(np.zeros((H, W)), interior)
        value, _ = photometric_loss(IL, IR, D)
        # constant windows: SSIM collapses to C1/(1+C1), plus the full L1 gap
        ssim = SSIM_C1 / (1.0 + SSIM_C1)
        assert value == pytest.approx(0.85 * (1 - ssim) / 2 + 0.15, rel=1e-12)

    def test_no_visible_pixels_errors(self):
        img = ramp_image(6, 8)
        with pytest.raises(DegenerateInputError):
            photometric_loss(img, img, ScalarMap(np.full((6, 8), 100.0)))

    def test_nonnegative_on_random(self):
        inst = make_instance(seed=5)
        value, _ = photometric_loss(inst["IL"], inst["IR"], inst["D"])
        assert value >= 0.0


class TestLrc:
    def test_consistent_constant_pair(self):
        D = ScalarMap(np.full((8, 16), 3.0))
        value, grad = lrc_loss(D, D)
        assert value == 0.0
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)

    def test_one_third_example(self):
        D = ScalarMap(np.full((8, 16), 2.0))
        DR = ScalarMap(np.full((8, 16), 4.0))
        value, _ = lrc_loss(D, DR)
        assert value == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_nonpositive_denominator_errors(self):
        D = ScalarMap(np.full((8, 16), 2.0))
        DR = ScalarMap(np.full((8, 16), -4.0))
        with pytest.raises(DegenerateInputError):
            lrc_loss(D, DR)


class TestSelectReferences:
    def test_uniform_confidence_row_major_ties(self):
        C = ScalarMap(np.full((30, 30), 0.5))
        spec = NeighborhoodSpec(5, 1)
        refs = select_references(C, LdrParams(k=4, spec=spec))
        # interior pixel: first four window taps in row-major order
        i, j = 15, 15
        got = [divmod(int(t), 30) for t in refs.index[i, j]]
        assert got == [(13, 13), (13, 14), (13, 15), (13, 16)]
        assert refs.ok[i, j].all()

    def test_single_peak(self):
        vals = np.zeros((9, 9))
        vals[3, 5] = 1.0
        refs = select_references(ScalarMap(vals), LdrParams(k=1, spec=NeighborhoodSpec(5, 1)))
        assert divmod(int(refs.index[4, 4, 0]), 9) == (3, 5)

    def test_border_shrinks_k(self):
        C = ScalarMap(np.full((20, 20), 0.5))
        refs = select_references(C, LdrParams(k=8, spec=NeighborhoodSpec(3, 1)))
        assert int(refs.ok[0, 0].sum()) == 3
        assert int(refs.ok[10, 10].sum()) == 8

    def test_invalid_confidence_not_selected(self):
        vals = np.full((9, 9), 0.9)
        valid = np.ones((9, 9), bool)
        valid[4, 5] = False
        refs = select_references(ScalarMap(vals, valid), LdrParams(k=8, spec=NeighborhoodSpec(3, 1)))
        flat_invalid = 4 * 9 + 5
        picked = refs.index[4, 4][refs.ok[4, 4]]
        assert flat_invalid not in picked.tolist()

    def test_k_validation(self):
        with pytest.raises(ValueError):
            LdrParams(k=0)
        with pytest.raises(ValueError):
            LdrParams(k=9, spec=NeighborhoodSpec(3, 1))


class TestLdr:
    def test_perfect_agreement_zero(self):
        rng = np.random.default_rng(1)
        D = ScalarMap(rng.uniform(1, 9, (12, 12)))
        refs = select_references(ScalarMap(rng.uniform(0, 1, (12, 12))),
                                 LdrParams(k=4, spec=NeighborhoodSpec(5, 1)))
        value, grad = ldr_loss(D, D, refs)
        assert value == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_single_inconsistent_reference(self):
        # 1x2 map: each pixel's only window tap is the other pixel
        D = ScalarMap(np.array([[0.0, np.e - 1.0]]))
        Dt = ScalarMap(np.array([[1.0, 0.0]]))
        refs = select_references(ScalarMap(np.ones((1, 2))),
                                 LdrParams(k=1, spec=NeighborhoodSpec(3, 1)))
        value, _ = ldr_loss(D, Dt, refs)
        assert value == pytest.approx(1.0, rel=1e-12)

    def test_omega_nu_values(self):
        assert _omega(1.0) == 0.5
        assert _nu(0.0) == 0.0

    def test_monotone_in_disparity_gap(self):
        refs = select_references(ScalarMap(np.ones((1, 2))),
                                 LdrParams(k=1, spec=NeighborhoodSpec(3, 1)))
        Dt = ScalarMap(np.array([[1.0, 0.0]]))
        prev = -1.0
        for gap in (0.5, 1.0, 2.0, 8.0):
            value, _ = ldr_loss(ScalarMap(np.array([[0.0, gap]])), Dt, refs)
            assert value >= prev
            prev = value

    def test_phi_map_matches_loss_mean(self):
        inst = make_instance(seed=2, size=16)
        refs = select_references(inst["C"], LdrParams(k=4, spec=NeighborhoodSpec(5, 1)))
        value, _ = ldr_loss(inst["D"], inst["Dt"], refs)
        phi = ldr_phi_map(inst["D"], inst["Dt"], refs)
        assert value == pytest.approx(phi.values[phi.valid].mean(), rel=1e-12)


class TestSmoothness:
    def test_constant_zero(self):
        D = ScalarMap(np.full((8, 8), 4.0))
        assert smoothness_image(D, ramp_image(8, 8))[0] == 0.0
        assert smoothness_depth(D, ScalarMap(np.arange(64.0).reshape(8, 8)))[0] == 0.0

    def test_unit_ramp_value_one(self):
        H, W = 10, 10
        D = ScalarMap(np.tile(np.arange(W, dtype=float), (H, 1)))
        flat = ImageBuffer(np.full((H, W), 0.5))
        assert smoothness_image(D, flat)[0] == pytest.approx(1.0, rel=1e-12)
        assert smoothness_depth(D, ScalarMap(np.full((H, W), 2.0)))[0] == pytest.approx(1.0, rel=1e-12)

    def test_dds_zero_on_constants(self):
        D = ScalarMap(np.full((8, 8), 4.0))
        Dt = ScalarMap(np.full((8, 8), 9.0))
        assert dds_loss(D, Dt)[0] == 0.0

    def test_dds_dual_term_fires(self):
        H, W = 10, 10
        D = ScalarMap(np.full((H, W), 3.0))
        Dt = ScalarMap(np.tile(np.arange(W, dtype=float), (H, 1)))
        assert dds_loss(D, Dt)[0] == pytest.approx(1.0, rel=1e-12)


class TestHybrid:
    def test_zero_weights_is_photometric(self):
        inst = make_instance(seed=3, size=16)
        rep = hybrid_loss(inst["IL"], inst["IR"], inst["D"], inst["DR"], inst["Dt"],
                          inst["C"], LossWeights(0, 0, 0),
                          LdrParams(k=4, spec=NeighborhoodSpec(5, 1)))
        assert rep.total == rep.photometric

    def test_weighted_sum_identity(self):
        inst = make_instance(seed=4, size=16)
        w = LossWeights(0.1, 0.1, 0.1)
        rep = hybrid_loss(inst["IL"], inst["IR"], inst["D"], inst["DR"], inst["Dt"],
                          inst["C"], w, LdrParams(k=4, spec=NeighborhoodSpec(5, 1)))
        assert rep.total == rep.photometric + 0.1 * (rep.lrc + rep.ldr + rep.dds)
        assert min(rep.photometric, rep.lrc, rep.ldr, rep.dds) >= 0.0

    def test_gradient_linearity(self):
        inst = make_instance(seed=5, size=16)
        params = LdrParams(k=4, spec=NeighborhoodSpec(5, 1))
        refs = select_references(inst["C"], params)
        _, gp = photometric_loss(inst["IL"], inst["IR"], inst["D"])
        _, gl = lrc_loss(inst["D"], inst["DR"])
        _, gr = ldr_loss(inst["D"], inst["Dt"], refs)
        _, gs = dds_loss(inst["D"], inst["Dt"])
        rep = hybrid_loss(inst["IL"], inst["IR"], inst["D"], inst["DR"], inst["Dt"],
                          inst["C"], LossWeights(0.2, 0.3, 0.4), params)
        np.testing.assert_array_equal(
            rep.grad_D.values, gp + 0.2 * gl + 0.3 * gr + 0.4 * gs
        )

    def test_weight_scaling(self):
        inst = make_instance(seed=6, size=16)
        params = LdrParams(k=4, spec=NeighborhoodSpec(5, 1))
        r1 = hybrid_loss(inst["IL"], inst["IR"], inst["D"], inst["DR"], inst["Dt"],
                         inst["C"], LossWeights(0.1, 0.1, 0.1), params)
        r2 = hybrid_loss(inst["IL"], inst["IR"], inst["D"], inst["DR"], inst["Dt"],
                         inst["C"], LossWeights(0.2, 0.2, 0.2), params)
        lhs = r2.total - r2.photometric
        rhs = 2.0 * (r1.total - r1.photometric)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestGradients:
    def test_all_terms_match_finite_differences(self):
        for r in run_gradcheck(seed=11, size=24, pixels=40):
            assert r.passed, f"{r.term}: max rel err {r.max_rel_err}"

    def test_fault_injection_caught(self):
        results = run_gradcheck(seed=11, size=16, pixels=10, flip_sign_of="lrc")
        by_term = {r.term: r.passed for r in results}
        assert not by_term["lrc"]
        assert all(v for t, v in by_term.items() if t != "lrc")
