"""Full-reference objective metrics on the luma plane: PSNR, SSIM, MS-SSIM.

SSIM follows the classic formulation: 11x11 Gaussian window (sigma 1.5),
K1=0.01, K2=0.03, valid-window convolution, dynamic range 2^bit_depth - 1.
MS-SSIM uses five dyadic scales with the canonical exponents; the scale
reduction is a 2x2 block mean (a trailing odd row/column is dropped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
from scipy.ndimage import correlate1d

from .yuv import FramePlanar

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# five-scale exponents of the standard multi-scale SSIM calibration
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MS_SSIM_SCALES = 5


@dataclass
class SequenceMetricResult:
    """Per-frame metric values plus their pooled aggregate.

    Frames with infinite PSNR (identical content) are excluded from the
    mean and counted in infinite_count; the aggregate is infinite only
    when every frame is identical.
    """

    metric_id: str
    per_frame: list[float]
    aggregate: float
    frame_count: int
    infinite_count: int = 0
    warnings: list[str] = field(default_factory=list)


def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


_KERNEL = _gaussian_kernel()


def _filter_valid(img: np.ndarray, kernel: np.ndarray = _KERNEL) -> np.ndarray:
    """Separable valid-mode windowed mean (kernel is symmetric)."""
    out = correlate1d(img, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    r = len(kernel) // 2
    return out[r:-r, r:-r]


def _check_pair(ref: FramePlanar, dist: FramePlanar) -> None:
    if ref.luma.shape != dist.luma.shape:
        raise ValueError(
            f"geometry mismatch: {ref.luma.shape} vs {dist.luma.shape}")
    if ref.bit_depth != dist.bit_depth:
        raise ValueError(
            f"bit depth mismatch: {ref.bit_depth} vs {dist.bit_depth}")


def psnr_luma(ref: FramePlanar, dist: FramePlanar) -> float:
    """Luma-only PSNR in dB; math.inf for identical planes."""
    _check_pair(ref, dist)
    diff = ref.luma.astype(np.float64) - dist.luma.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    peak = float(2 ** ref.bit_depth - 1)
    return 10.0 * math.log10(peak * peak / mse)


def _ssim_maps(x: np.ndarray, y: np.ndarray, dynamic_range: float):
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2
    mu_x = _filter_valid(x)
    mu_y = _filter_valid(y)
    var_x = _filter_valid(x * x) - mu_x * mu_x
    var_y = _filter_valid(y * y) - mu_y * mu_y
    cov = _filter_valid(x * y) - mu_x * mu_y
    luminance = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    cs = (2.0 * cov + c2) / (var_x + var_y + c2)
    return luminance, cs


def ssim_luma(ref: FramePlanar, dist: FramePlanar) -> float:
    """Mean local SSIM over the luma plane."""
    _check_pair(ref, dist)
    if min(ref.luma.shape) < SSIM_WINDOW:
        raise ValueError(
            f"frame {ref.luma.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    x = ref.luma.astype(np.float64)
    y = dist.luma.astype(np.float64)
    luminance, cs = _ssim_maps(x, y, float(2 ** ref.bit_depth - 1))
    return float(np.mean(luminance * cs))


def _downsample(img: np.ndarray) -> np.ndarray:
    h, w = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    img = img[:h, :w]
    return img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def ms_ssim_frame(ref: FramePlanar, dist: FramePlanar) -> float:
    """Five-scale MS-SSIM of one frame pair.

    Strongly anti-correlated inputs can drive a scale's contrast-structure
    mean negative, in which case the fractional power yields NaN (as in the
    original formulation).
    """
    _check_pair(ref, dist)
    smallest = min(ref.luma.shape) // 2 ** (MS_SSIM_SCALES - 1)
    if smallest < SSIM_WINDOW:
        raise ValueError(
            f"frame {ref.luma.shape} too small for {MS_SSIM_SCALES} scales "
            f"(final scale {smallest} < window {SSIM_WINDOW})")
    x = ref.luma.astype(np.float64)
    y = dist.luma.astype(np.float64)
    dynamic_range = float(2 ** ref.bit_depth - 1)
    value = 1.0
    for scale in range(MS_SSIM_SCALES):
        luminance, cs = _ssim_maps(x, y, dynamic_range)
        if scale == MS_SSIM_SCALES - 1:
            value *= float(np.mean(luminance * cs)) ** MS_SSIM_WEIGHTS[scale]
        else:
            value *= float(np.mean(cs)) ** MS_SSIM_WEIGHTS[scale]
            x = _downsample(x)
            y = _downsample(y)
    return value


def ms_ssim_luma(ref_seq: Iterable[FramePlanar],
                 dist_seq: Iterable[FramePlanar]) -> SequenceMetricResult:
    """Per-frame MS-SSIM over paired sequences, pooled by arithmetic mean."""
    per_frame = [ms_ssim_frame(r, d) for r, d in _zip_frames(ref_seq, dist_seq)]
    return SequenceMetricResult(
        metric_id="msssim",
        per_frame=per_frame,
        aggregate=float(np.mean(per_frame)),
        frame_count=len(per_frame),
    )


def _zip_frames(ref_seq, dist_seq) -> Iterator[tuple[FramePlanar, FramePlanar]]:
    ref_it, dist_it = iter(ref_seq), iter(dist_seq)
    index = 0
    while True:
        ref = next(ref_it, None)
        dist = next(dist_it, None)
        if ref is None and dist is None:
            return
        if ref is None or dist is None:
            longer = "distorted" if ref is None else "reference"
            raise ValueError(f"sequence length mismatch: {longer} stream has extra "
                             f"frames past index {index - 1}")
        yield ref, dist
        index += 1


def sequence_metric(ref_seq: Iterable[FramePlanar], dist_seq: Iterable[FramePlanar],
                    metric_id: str, pooling: str = "frame") -> SequenceMetricResult:
    """Apply a per-frame metric across paired sequences and pool the result.

    metric_id is "psnr" or "ssim" (use ms_ssim_luma for the multi-scale
    path). PSNR pooling is either "frame" (mean of per-frame dB, infinite
    frames excluded) or "global" (dB of the mean per-frame MSE).
    """
    if metric_id not in ("psnr", "ssim"):
        raise ValueError(f"unknown metric {metric_id!r}")
    if pooling not in ("frame", "global"):
        raise ValueError(f"unknown pooling {pooling!r}")

    per_frame: list[float] = []
    mses: list[float] = []
    peak = None
    for ref, dist in _zip_frames(ref_seq, dist_seq):
        peak = float(2 ** ref.bit_depth - 1)
        if metric_id == "psnr":
            per_frame.append(psnr_luma(ref, dist))
            if pooling == "global":
                diff = ref.luma.astype(np.float64) - dist.luma.astype(np.float64)
                mses.append(float(np.mean(diff * diff)))
        else:
            per_frame.append(ssim_luma(ref, dist))
    if not per_frame:
        raise ValueError("empty sequence")

    if metric_id == "ssim":
        return SequenceMetricResult("ssim", per_frame, float(np.mean(per_frame)),
                                    len(per_frame))

    infinite = sum(1 for v in per_frame if math.isinf(v))
    if pooling == "global":
        mean_mse = float(np.mean(mses))
        aggregate = math.inf if mean_mse == 0.0 else 10.0 * math.log10(peak * peak / mean_mse)
    elif infinite == len(per_frame):
        aggregate = math.inf
    else:
        aggregate = float(np.mean([v for v in per_frame if not math.isinf(v)]))
    return SequenceMetricResult("psnr", per_frame, aggregate, len(per_frame),
                                infinite_count=infinite)
