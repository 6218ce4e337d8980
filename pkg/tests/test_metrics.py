import math

import numpy as np
import pytest

import oracles
from conftest import make_frame, random_frame
from vqeval.metrics import (ms_ssim_frame, ms_ssim_luma, psnr_luma,
                            sequence_metric, ssim_luma)


class TestPsnr:
    def test_identical_frames_infinite(self, rng):
        frame = random_frame(rng, 16, 16)
        assert psnr_luma(frame, frame) == math.inf

    def test_constant_offset(self):
        ref = make_frame(np.full((16, 16), 100))
        dist = make_frame(np.full((16, 16), 110))
        expected = 10 * math.log10(65025 / 100)  # = 28.13 dB
        assert psnr_luma(ref, dist) == pytest.approx(expected, abs=1e-12)
        assert psnr_luma(ref, dist) == pytest.approx(28.1308, abs=1e-4)

    def test_full_scale_error_is_zero_db(self):
        ref = make_frame(np.zeros((16, 16)))
        dist = make_frame(np.full((16, 16), 255))
        assert psnr_luma(ref, dist) == 0.0

    def test_symmetry(self, rng):
        a = random_frame(rng, 16, 16)
        b = random_frame(rng, 16, 16)
        assert psnr_luma(a, b) == psnr_luma(b, a)

    def test_invariant_under_common_shift(self, rng):
        base = rng.integers(10, 200, size=(16, 16))
        noise = rng.integers(-5, 6, size=(16, 16))
        for shift in (1, 7, 30):
            a1 = make_frame(base)
            b1 = make_frame(base + noise)
            a2 = make_frame(base + shift)
            b2 = make_frame(base + noise + shift)
            assert psnr_luma(a2, b2) == pytest.approx(psnr_luma(a1, b1), rel=1e-12)

    def test_matches_brute_force(self, rng):
        for _ in range(5):
            a = random_frame(rng, 16, 16)
            b = random_frame(rng, 16, 16)
            assert psnr_luma(a, b) == pytest.approx(
                oracles.psnr_brute(a.luma, b.luma, 8), abs=1e-9)

    def test_geometry_mismatch(self, rng):
        with pytest.raises(ValueError, match="geometry"):
            psnr_luma(random_frame(rng, 16, 16), random_frame(rng, 16, 32))

    def test_bit_depth_mismatch(self, rng):
        with pytest.raises(ValueError, match="bit depth"):
            psnr_luma(random_frame(rng, 16, 16, 8), random_frame(rng, 16, 16, 10))


class TestSsim:
    def test_identical_frames_exactly_one(self, rng):
        frame = random_frame(rng, 24, 24)
        assert ssim_luma(frame, frame) == 1.0

    def test_constant_identical_is_one(self):
        frame = make_frame(np.full((16, 16), 128))
        assert ssim_luma(frame, frame) == 1.0

    def test_inverted_high_contrast_scores_low(self, rng):
        pattern = np.zeros((32, 32), dtype=np.uint8)
        pattern[::2, :] = 255  # high-contrast stripes
        ref = make_frame(pattern)
        dist = make_frame(255 - pattern)
        score = ssim_luma(ref, dist)
        assert score < 0.1
        assert score == pytest.approx(oracles.ssim_brute(ref.luma, dist.luma, 8), abs=1e-9)

    def test_matches_brute_force(self, rng):
        for _ in range(3):
            a = random_frame(rng, 16, 16)
            b = random_frame(rng, 16, 16)
            assert ssim_luma(a, b) == pytest.approx(
                oracles.ssim_brute(a.luma, b.luma, 8), abs=1e-9)

    def test_matches_reference_library(self, rng):
        skimage_metrics = pytest.importorskip("skimage.metrics")
        a = random_frame(rng, 48, 48)
        b = random_frame(rng, 48, 48)
        expected = skimage_metrics.structural_similarity(
            a.luma, b.luma, win_size=11, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=255)
        assert ssim_luma(a, b) == pytest.approx(expected, abs=1e-7)

    def test_frame_smaller_than_window(self, rng):
        with pytest.raises(ValueError, match="window"):
            ssim_luma(random_frame(rng, 8, 8), random_frame(rng, 8, 8))


class TestMsSsim:
    def test_identical_sequences_exactly_one(self, rng):
        frames = [random_frame(rng, 176, 176) for _ in range(2)]
        result = ms_ssim_luma(frames, list(frames))
        assert result.aggregate == 1.0
        assert result.per_frame == [1.0, 1.0]

    def test_too_small_for_five_scales(self, rng):
        with pytest.raises(ValueError, match="too small for 5 scales"):
            ms_ssim_frame(random_frame(rng, 64, 64), random_frame(rng, 64, 64))

    def test_matches_independent_reference(self, rng):
        base = rng.integers(0, 256, size=(176, 176))
        noisy = np.clip(base + rng.normal(0, 12, size=base.shape), 0, 255).astype(int)
        ref = make_frame(base)
        dist = make_frame(noisy)
        expected = oracles.msssim_reference(ref.luma, dist.luma, 8)
        assert ms_ssim_frame(ref, dist) == pytest.approx(expected, abs=1e-4)

    def test_length_mismatch(self, rng):
        frames = [random_frame(rng, 176, 176) for _ in range(2)]
        with pytest.raises(ValueError, match="length mismatch"):
            ms_ssim_luma(frames, frames[:1])


class TestSequenceMetric:
    def test_all_identical_aggregate_infinite(self, rng):
        frames = [random_frame(rng, 16, 16) for _ in range(3)]
        result = sequence_metric(frames, list(frames), "psnr")
        assert result.per_frame == [math.inf] * 3
        assert result.aggregate == math.inf
        assert result.infinite_count == 3

    def test_mean_of_frames(self):
        # errors tuned so per-frame PSNR is exactly 30 and 40 dB
        ref = make_frame(np.zeros((16, 16)))
        mse_for = lambda db: 65025 / 10 ** (db / 10)
        frames_dist = []
        for db in (30.0, 40.0):
            value = math.sqrt(mse_for(db))
            frames_dist.append(make_frame(np.full((16, 16), round(value))))
        per = [psnr_luma(ref, d) for d in frames_dist]
        result = sequence_metric([ref, ref], frames_dist, "psnr")
        assert result.aggregate == pytest.approx(sum(per) / 2)

    def test_infinite_frames_excluded(self, rng):
        ref = [random_frame(rng, 16, 16) for _ in range(3)]
        dist = [ref[0]] + [random_frame(rng, 16, 16) for _ in range(2)]
        result = sequence_metric(ref, dist, "psnr")
        assert result.infinite_count == 1
        finite = [v for v in result.per_frame if not math.isinf(v)]
        assert result.aggregate == pytest.approx(sum(finite) / 2)

    def test_global_pooling(self, rng):
        ref = [random_frame(rng, 16, 16) for _ in range(2)]
        dist = [random_frame(rng, 16, 16) for _ in range(2)]
        result = sequence_metric(ref, dist, "psnr", pooling="global")
        mses = [np.mean((r.luma.astype(float) - d.luma.astype(float)) ** 2)
                for r, d in zip(ref, dist)]
        expected = 10 * math.log10(65025 / np.mean(mses))
        assert result.aggregate == pytest.approx(expected, rel=1e-12)

    def test_length_mismatch_propagates(self, rng):
        frames = [random_frame(rng, 16, 16) for _ in range(2)]
        with pytest.raises(ValueError, match="length mismatch"):
            sequence_metric(frames, frames[:1], "psnr")
