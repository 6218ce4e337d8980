"""Bjontegaard deltas between two rate-quality curves.

Classic cubic-polynomial variant: quality (or log10 rate) is fitted as a
cubic and the average curve difference is integrated analytically over the
overlap of the two curves. With the usual four rate points the fit is an
exact interpolation. The DMOS flavor additionally recomputes the delta on
the confidence-interval bounds of the two curves, bounding the perceptual
bitrate saving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

if TYPE_CHECKING:
    from .subjective import DmosResult

MIN_POINTS = 4


@dataclass(frozen=True)
class RdPoint:
    rate_mbps: float
    quality: float

    def __post_init__(self):
        if self.rate_mbps <= 0:
            raise ValueError(f"rate must be positive, got {self.rate_mbps}")
        if not math.isfinite(self.quality):
            raise ValueError(f"quality must be finite, got {self.quality}")


@dataclass
class RdCurve:
    label: str
    metric_id: str
    points: list[RdPoint]

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: p.rate_mbps)
        rates = [p.rate_mbps for p in self.points]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError(f"curve {self.label!r}: rates must be strictly increasing")

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate_mbps for p in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])


@dataclass
class BdResult:
    bd_rate_percent: float | None
    bd_quality: float | None
    overlap: tuple[float, float]
    warnings: list[str] = field(default_factory=list)


def fit_cubic(xs: Sequence[float], ys: Sequence[float]) -> np.ndarray:
    """Cubic coefficients (ascending powers): exact interpolation for 4
    points, least squares beyond."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < MIN_POINTS:
        raise ValueError(f"cubic fit needs at least {MIN_POINTS} points, got {len(xs)}")
    if len(np.unique(xs)) != len(xs):
        raise ValueError("cubic fit requires distinct x values")
    return npoly.polyfit(xs, ys, 3)


def _mean_curve_gap(anchor_x, anchor_y, test_x, test_y) -> tuple[float, tuple[float, float]]:
    """Average (test - anchor) of the two cubic fits over the x overlap."""
    low = max(float(np.min(anchor_x)), float(np.min(test_x)))
    high = min(float(np.max(anchor_x)), float(np.max(test_x)))
    if high <= low:
        raise ValueError(f"curves do not overlap (interval [{low}, {high}])")
    gap_integral = npoly.polyint(npoly.polysub(fit_cubic(test_x, test_y),
                                               fit_cubic(anchor_x, anchor_y)))
    area = npoly.polyval(high, gap_integral) - npoly.polyval(low, gap_integral)
    return area / (high - low), (low, high)


def _check_curves(anchor: RdCurve, test: RdCurve) -> None:
    for curve in (anchor, test):
        if len(curve.points) < MIN_POINTS:
            raise ValueError(
                f"curve {curve.label!r} has {len(curve.points)} points, "
                f"needs at least {MIN_POINTS}")


def bd_quality(anchor: RdCurve, test: RdCurve) -> BdResult:
    """Average quality gain of test over anchor at equal bitrate."""
    _check_curves(anchor, test)
    delta, overlap = _mean_curve_gap(np.log10(anchor.rates), anchor.qualities,
                                     np.log10(test.rates), test.qualities)
    return BdResult(bd_rate_percent=None, bd_quality=delta, overlap=overlap)


def bd_rate(anchor: RdCurve, test: RdCurve) -> BdResult:
    """Average bitrate change of test vs anchor at equal quality, in percent.

    Negative values mean the test curve reaches the same quality at a lower
    bitrate. Non-monotone quality still computes, with a warning attached.
    """
    _check_curves(anchor, test)
    warnings = []
    for curve in (anchor, test):
        q = curve.qualities
        if len(np.unique(q)) != len(q):
            raise ValueError(f"curve {curve.label!r}: duplicate quality values")
        if np.any(np.diff(q) <= 0):
            warnings.append(f"curve {curve.label!r}: quality not monotone in rate")
    delta, overlap = _mean_curve_gap(anchor.qualities, np.log10(anchor.rates),
                                     test.qualities, np.log10(test.rates))
    return BdResult(bd_rate_percent=(10.0 ** delta - 1.0) * 100.0, bd_quality=None,
                    overlap=overlap, warnings=warnings)


def _dmos_curve(points: "Sequence[tuple[float, DmosResult]]", label: str,
                bound: str) -> RdCurve:
    def pick(d):
        if bound == "mean":
            return d.dmos
        return d.ci[0] if bound == "low" else d.ci[1]

    return RdCurve(label, "dmos", [RdPoint(rate, pick(d)) for rate, d in points])


def bd_rate_limits(anchor: "Sequence[tuple[float, DmosResult]]",
                   test: "Sequence[tuple[float, DmosResult]]",
                   ) -> tuple[BdResult, BdResult, BdResult]:
    """BD-rate on DMOS curves plus the bounds induced by their 95% CIs.

    Returns (nominal, lower, upper) ordered numerically: `lower` pairs the
    test curve's CI tops against the anchor's CI bottoms (the optimistic,
    most negative saving) and `upper` the reverse; the two are swapped if
    curve shapes ever invert that ordering.
    """
    nominal = bd_rate(_dmos_curve(anchor, "anchor", "mean"),
                      _dmos_curve(test, "test", "mean"))
    optimistic = bd_rate(_dmos_curve(anchor, "anchor", "low"),
                         _dmos_curve(test, "test", "high"))
    pessimistic = bd_rate(_dmos_curve(anchor, "anchor", "high"),
                          _dmos_curve(test, "test", "low"))
    lower, upper = sorted((optimistic, pessimistic), key=lambda r: r.bd_rate_percent)
    return nominal, lower, upper


def bd_quality_limits(anchor: "Sequence[tuple[float, DmosResult]]",
                      test: "Sequence[tuple[float, DmosResult]]",
                      ) -> tuple[BdResult, BdResult, BdResult]:
    """BD-quality on DMOS curves plus the CI-induced bounds, ordered
    numerically as in bd_rate_limits."""
    nominal = bd_quality(_dmos_curve(anchor, "anchor", "mean"),
                         _dmos_curve(test, "test", "mean"))
    optimistic = bd_quality(_dmos_curve(anchor, "anchor", "low"),
                            _dmos_curve(test, "test", "high"))
    pessimistic = bd_quality(_dmos_curve(anchor, "anchor", "high"),
                             _dmos_curve(test, "test", "low"))
    lower, upper = sorted((optimistic, pessimistic), key=lambda r: r.bd_quality)
    return nominal, lower, upper
