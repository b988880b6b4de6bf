import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsifreq.cube import HsiCube
from hsifreq.exceptions import ParameterError, ShapeError
from hsifreq.metrics import (
    DEFAULT_LOSS_WEIGHTS,
    LossReport,
    MetricsReport,
    append_csv,
    bmse_loss,
    ergas,
    evaluate,
    iswt2_haar,
    l1_loss,
    psnr,
    rmse,
    sam,
    sam_loss,
    swt2_haar,
    swt_loss,
    total_loss,
)

import oracles


def _pair(seed, shape=(4, 4, 3)):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.05, 1.0, shape), rng.uniform(0.05, 1.0, shape)


class TestPsnr:
    def test_cap(self):
        x = np.ones((2, 2, 2))
        assert psnr(x, x) == 100.0

    def test_twenty_db(self):
        assert psnr(np.ones((3, 3, 2)), np.full((3, 3, 2), 0.9)) == pytest.approx(20.0, abs=1e-9)

    def test_half_offset(self):
        x = np.random.default_rng(0).random((4, 4, 2))
        assert psnr(x, x + 0.5) == pytest.approx(10 * np.log10(4), abs=1e-9)

    def test_range(self):
        with pytest.raises(ParameterError):
            psnr(np.ones((1, 1, 1)), np.ones((1, 1, 1)), data_range=0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            psnr(np.ones((2, 2, 2)), np.ones((2, 2, 3)))


class TestSam:
    def test_identical(self):
        x = np.random.default_rng(1).uniform(0.1, 1, (5, 5, 4))
        assert sam(x, x) < 1e-3

    def test_orthogonal(self):
        ref = np.zeros((3, 3, 2))
        ref[..., 0] = 1
        test = np.zeros((3, 3, 2))
        test[..., 1] = 1
        assert sam(ref, test) == pytest.approx(90.0, abs=1e-3)

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_scale_invariance(self, c):
        ref, test = _pair(3)
        assert sam(ref, c * test) == pytest.approx(sam(ref, test), abs=1e-3)
        assert sam(ref, c * ref) < 1e-3

    def test_needs_two_bands(self):
        with pytest.raises(ShapeError):
            sam(np.ones((2, 2, 1)), np.ones((2, 2, 1)))

    def test_radians_and_degrees_agree(self):
        ref, test = _pair(4)
        assert np.degrees(sam_loss(ref, test)) == pytest.approx(sam(ref, test))


class TestRmseErgas:
    def test_uniform_difference(self):
        assert rmse(np.zeros((4, 4, 2)), np.full((4, 4, 2), 0.1)) == pytest.approx(0.1)

    def test_single_element(self):
        a = np.zeros((3, 4, 5))
        b = a.copy()
        b[1, 2, 3] = 0.6
        assert rmse(a, b) == pytest.approx(0.6 / np.sqrt(60))

    def test_ergas_one_band(self):
        assert ergas(np.full((4, 4, 1), 0.5), np.full((4, 4, 1), 0.55)) == pytest.approx(10.0)

    def test_ergas_two_bands(self):
        ref = np.ones((2, 2, 2))
        test = ref.copy()
        test[..., 0] += 0.1
        test[..., 1] += 0.3
        assert ergas(ref, test) == pytest.approx(100 * np.sqrt(0.05))

    def test_ergas_zero_mean_guard(self):
        v = ergas(np.zeros((2, 2, 1)), np.full((2, 2, 1), 1e-9))
        assert np.isfinite(v) and v == pytest.approx(10.0)

    def test_identical_is_zero(self):
        x = np.random.default_rng(5).random((3, 3, 3))
        assert rmse(x, x) == 0 and ergas(x, x) == 0


class TestOracle:
    @pytest.mark.parametrize("seed", range(25))
    def test_matches_scalar_loops(self, seed):
        ref, test = _pair(seed)
        r, t = ref.tolist(), test.tolist()
        assert psnr(ref, test) == pytest.approx(oracles.psnr(r, t), abs=1e-9)
        assert sam(ref, test) == pytest.approx(oracles.sam_deg(r, t), abs=1e-9)
        assert rmse(ref, test) == pytest.approx(oracles.rmse(r, t), abs=1e-9)
        assert ergas(ref, test) == pytest.approx(oracles.ergas(r, t), abs=1e-9)


class TestProperties:
    @given(st.integers(0, 10_000))
    @settings(max_examples=50)
    def test_symmetry(self, seed):
        a, b = _pair(seed)
        assert rmse(a, b) == rmse(b, a)
        assert sam(a, b) == pytest.approx(sam(b, a), abs=1e-12)

    def test_monotone_in_noise(self):
        rng = np.random.default_rng(0)
        ref = rng.random((8, 8, 4))
        noise = rng.standard_normal(ref.shape)
        sigmas = [0.01, 0.02, 0.05, 0.1]
        ps = [psnr(ref, ref + s * noise) for s in sigmas]
        rs = [rmse(ref, ref + s * noise) for s in sigmas]
        assert all(x > y for x, y in zip(ps, ps[1:]))
        assert all(x < y for x, y in zip(rs, rs[1:]))

    def test_report_invariants(self):
        ref, test = _pair(7)
        rep = evaluate(ref, test)
        assert rep.rmse >= 0 and 0 <= rep.sam_deg <= 180 and rep.ergas >= 0

    def test_accepts_cubes(self):
        ref, test = _pair(8)
        assert psnr(HsiCube(ref), HsiCube(test)) == pytest.approx(
            psnr(ref.astype(np.float32), test.astype(np.float32)), abs=1e-12
        )


class TestSwt:
    @given(st.integers(0, 1000), st.integers(1, 3))
    @settings(max_examples=30)
    def test_perfect_reconstruction(self, seed, levels):
        x = np.random.default_rng(seed).random((16, 12))
        sub = swt2_haar(x, levels)
        assert len(sub) == 3 * levels + 1
        np.testing.assert_allclose(iswt2_haar(sub), x, atol=1e-6)

    def test_constant_image(self):
        sub = swt2_haar(np.full((8, 8), 0.4), levels=2)
        for detail in sub[:-1]:
            assert np.all(detail == 0)
        np.testing.assert_allclose(sub[-1], 0.4)

    def test_offset_only_moves_approximation(self):
        ref = np.random.default_rng(2).random((8, 8, 3))
        assert swt_loss(ref, ref + 0.2) == pytest.approx(0.2, abs=1e-12)
        assert swt_loss(ref, ref) == 0.0

    def test_levels_match_dilated_filters(self):
        x = np.random.default_rng(3).random((8, 8))
        lh, hl, hh, lh2, hl2, hh2, ll2 = swt2_haar(x, 2)
        ll1 = 0.25 * (x + np.roll(x, -1, 0) + np.roll(x, -1, 1) + np.roll(x, (-1, -1), (0, 1)))
        expected_ll2 = 0.25 * (ll1 + np.roll(ll1, -2, 0) + np.roll(ll1, -2, 1) + np.roll(ll1, (-2, -2), (0, 1)))
        np.testing.assert_allclose(ll2, expected_ll2, atol=1e-12)

    def test_too_small(self):
        with pytest.raises(ShapeError):
            swt2_haar(np.zeros((3, 8)), levels=2)

    def test_weight_count(self):
        x = np.zeros((4, 4, 1))
        with pytest.raises(ParameterError):
            swt_loss(x, x, levels=1, weights=[1, 1, 1])


class TestLosses:
    def test_bmse_uniform(self):
        assert bmse_loss(np.zeros((4, 4, 3)), np.full((4, 4, 3), 0.1)) == pytest.approx(0.1)

    def test_bmse_single_band(self):
        ref = np.zeros((4, 4, 10))
        test = ref.copy()
        test[:, :, 3] = 0.2
        assert bmse_loss(ref, test) == pytest.approx(0.02)

    def test_l1(self):
        assert l1_loss(np.zeros((2, 2, 2)), np.full((2, 2, 2), -0.3)) == pytest.approx(0.3)

    def test_total_identical(self):
        x = np.random.default_rng(1).uniform(0.1, 1, (8, 8, 4))
        rep = total_loss(x, x)
        assert rep.l1 == 0 and rep.swt == 0 and rep.bmse == 0
        assert rep.sam_loss_rad < 1e-3 and rep.total < 1e-3

    def test_default_weights(self):
        ref, test = _pair(2, (8, 8, 4))
        rep = total_loss(ref, test)
        assert rep.weights == (1.0, 0.001, 0.01, 0.01) == DEFAULT_LOSS_WEIGHTS

    @given(st.integers(0, 5000))
    @settings(max_examples=30)
    def test_total_consistency(self, seed):
        ref, test = _pair(seed, (8, 8, 3))
        r = total_loss(ref, test)
        recomputed = r.w1 * r.l1 + r.w2 * r.sam_loss_rad + r.w3 * r.swt + r.w4 * r.bmse
        assert abs(r.total - recomputed) < 1e-9

    def test_custom_weights(self):
        ref, test = _pair(3, (8, 8, 3))
        r = total_loss(ref, test, weights=(0, 1, 0, 0))
        assert r.total == pytest.approx(r.sam_loss_rad)
        with pytest.raises(ParameterError):
            total_loss(ref, test, weights=(1, 2))


class TestCsv:
    def test_append_writes_header_once(self, tmp_path):
        rep = evaluate(*_pair(1))
        p = tmp_path / "m.csv"
        append_csv(rep, p)
        append_csv(rep, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "psnr_db,sam_deg,rmse,ergas"
        assert len(lines) == 3 and lines[1] == lines[2]
        assert [float(v) for v in lines[1].split(",")] == [rep.psnr_db, rep.sam_deg, rep.rmse, rep.ergas]

    def test_loss_header(self):
        assert LossReport.csv_header() == "l1,sam_loss_rad,swt,bmse,total,w1,w2,w3,w4"
        assert MetricsReport.csv_header() == "psnr_db,sam_deg,rmse,ergas"
