"""Spatial and temporal information descriptors of a sequence.

SI is the spatial standard deviation of the Sobel gradient magnitude per
frame (border pixels excluded); TI is the standard deviation of the
frame-to-frame luma difference. Both report the maximum over time.
Luma is rescaled to the 8-bit range first (10-bit samples divided by 4) so
values are comparable across bit depths; the standard deviation is the
population one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .yuv import FramePlanar


@dataclass
class SitiResult:
    si: float
    ti: float
    per_frame_si: list[float]
    per_frame_ti: list[float]


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)


def _normalized_luma(frame: FramePlanar) -> np.ndarray:
    luma = frame.luma.astype(np.float64)
    if frame.bit_depth == 10:
        luma = luma / 4.0
    return luma


def _sobel_magnitude(luma: np.ndarray) -> np.ndarray:
    """Gradient magnitude over the interior (3x3 Sobel, valid region only)."""
    p = luma
    gx = ((p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
          - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2]))
    gy = ((p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
          - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:]))
    return np.sqrt(gx * gx + gy * gy)


def si_frame(frame: FramePlanar) -> float:
    luma = _normalized_luma(frame)
    if min(luma.shape) < 3:
        raise ValueError("frame too small for the 3x3 Sobel operator")
    return float(np.std(_sobel_magnitude(luma)))


def si_ti(frames: Iterable[FramePlanar]) -> SitiResult:
    """SI/TI of a sequence; requires at least two frames (TI needs a pair)."""
    per_si: list[float] = []
    per_ti: list[float] = []
    prev: np.ndarray | None = None
    for frame in frames:
        luma = _normalized_luma(frame)
        if min(luma.shape) < 3:
            raise ValueError("frame too small for the 3x3 Sobel operator")
        per_si.append(float(np.std(_sobel_magnitude(luma))))
        if prev is not None:
            per_ti.append(float(np.std(luma - prev)))
        prev = luma
    if not per_si:
        raise ValueError("empty sequence")
    if not per_ti:
        raise ValueError("temporal information needs at least 2 frames")
    return SitiResult(si=max(per_si), ti=max(per_ti),
                      per_frame_si=per_si, per_frame_ti=per_ti)
