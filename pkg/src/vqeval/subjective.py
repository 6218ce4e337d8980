"""DSCQS vote analysis: differential scores, observer screening, bias
removal, DMOS with confidence intervals and Welch t-test significance.

The analysis chain runs on differential scores x = 100 - (y_ref - y_test),
one per (observer, scene, configuration). Screening is the kurtosis-
conditioned outlier count over these populations; bias removal subtracts
each observer's mean deviation from the per-configuration means, which
leaves DMOS itself untouched on complete matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import TYPE_CHECKING, Iterable

import numpy as np
from scipy.special import betainc

if TYPE_CHECKING:
    from .session import SessionPlan

# Pairwise grid layout used for significance reports: one codec's rate
# points down the rows, the other codec's across the columns, each side
# closed by the 4K and REF configurations.
GRID_ROW_LABELS = ("HEVC_R1", "HEVC_R2", "HEVC_R3", "HEVC_R4", "4K", "REF")
GRID_COL_LABELS = ("VVC_R1", "VVC_R2", "VVC_R3", "VVC_R4", "4K", "REF")

SCREEN_RATIO_LIMIT = 0.05
SCREEN_ASYMMETRY_LIMIT = 0.3


@dataclass(frozen=True)
class VoteRecord:
    """One submitted ballot: the A and B marks of a single test cell."""

    observer_id: str
    btc_index: int
    score_a: float
    score_b: float
    timestamp: datetime

    def __post_init__(self):
        for name, score in (("score_a", self.score_a), ("score_b", self.score_b)):
            if not 0.0 <= score <= 100.0:
                raise ValueError(f"{name}={score} outside [0, 100]")


class ScoreMatrix:
    """Differential scores indexed by (observer, scene, config label)."""

    def __init__(self, scores: dict[tuple[str, str, str], float]):
        self._scores = dict(scores)
        self.observers = tuple(sorted({k[0] for k in scores}))
        self.populations = tuple(sorted({(k[1], k[2]) for k in scores}))

    def value(self, observer: str, scene: str, label: str) -> float:
        return self._scores[(observer, scene, label)]

    def get(self, observer: str, scene: str, label: str) -> float | None:
        return self._scores.get((observer, scene, label))

    def items(self):
        return self._scores.items()

    def scenes(self) -> list[str]:
        return sorted({s for s, _ in self.populations})

    def labels(self, scene: str) -> list[str]:
        return sorted({l for s, l in self.populations if s == scene})

    def population(self, scene: str, label: str) -> np.ndarray:
        """Scores of one (scene, config) population, in observer-roster order."""
        values = [self._scores[(o, scene, label)] for o in self.observers
                  if (o, scene, label) in self._scores]
        if not values:
            raise KeyError(f"no scores for {scene}/{label}")
        return np.asarray(values, dtype=np.float64)

    def without_observers(self, drop: Iterable[str]) -> "ScoreMatrix":
        drop = set(drop)
        return ScoreMatrix({k: v for k, v in self._scores.items() if k[0] not in drop})

    def __len__(self):
        return len(self._scores)

    def __eq__(self, other):
        return isinstance(other, ScoreMatrix) and self._scores == other._scores


def differential_scores(votes: list[VoteRecord], plan: "SessionPlan") -> ScoreMatrix:
    """Join votes with the session plan and form x = 100 - (y_ref - y_test)."""
    scores: dict[tuple[str, str, str], float] = {}
    for vote in votes:
        btc = plan.btc(vote.btc_index)
        if btc is None:
            raise ValueError(f"vote references unknown BTC index {vote.btc_index}")
        key = (vote.observer_id, btc.scene_id, btc.config.label)
        if key in scores:
            raise ValueError(
                f"duplicate vote from {vote.observer_id!r} for BTC {vote.btc_index}")
        y_ref, y_test = ((vote.score_a, vote.score_b) if btc.a_is_reference
                         else (vote.score_b, vote.score_a))
        scores[key] = 100.0 - (y_ref - y_test)
    return ScoreMatrix(scores)


def population_thresholds(values: np.ndarray) -> tuple[float, float, float, float]:
    """Outlier thresholds of one population: (lower, upper, kurtosis, factor).

    The spread factor is 2 when the kurtosis coefficient m4/m2^2 lies in
    [2, 4] (distribution near-normal), sqrt(20) otherwise; the standard
    deviation itself is the sample one.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    mean = float(np.mean(values))
    deviations = values - mean
    m2 = float(np.mean(deviations ** 2))
    m4 = float(np.mean(deviations ** 4))
    kurtosis = m4 / (m2 * m2) if m2 > 0.0 else 0.0
    factor = 2.0 if 2.0 <= kurtosis <= 4.0 else math.sqrt(20.0)
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    half = factor * std
    return mean - half, mean + half, kurtosis, factor


@dataclass
class ObserverDiagnostic:
    observer_id: str
    p_count: int  # scores above the upper threshold
    q_count: int  # scores below the lower threshold
    population_count: int
    rejected: bool

    @property
    def outlier_ratio(self) -> float:
        return (self.p_count + self.q_count) / self.population_count

    @property
    def asymmetry(self) -> float:
        total = self.p_count + self.q_count
        return abs(self.p_count - self.q_count) / total if total else 0.0


def screen_observers(matrix: ScoreMatrix):
    """Kurtosis-conditioned outlier screening over differential scores.

    Per population the thresholds are mean +/- factor*std; an observer is
    rejected when more than 5% of their scores fall outside AND the
    violations are not one-sided (|P-Q|/(P+Q) < 0.3).

    Returns (retained_matrix, rejected_ids, diagnostics).
    """
    if len(matrix.observers) < 3:
        raise ValueError("screening needs at least 3 observers")

    bounds = {}
    for scene, label in matrix.populations:
        lower, upper, _, _ = population_thresholds(matrix.population(scene, label))
        bounds[(scene, label)] = (lower, upper)

    diagnostics: list[ObserverDiagnostic] = []
    rejected: list[str] = []
    for observer in matrix.observers:
        p = q = j = 0
        for scene, label in matrix.populations:
            score = matrix.get(observer, scene, label)
            if score is None:
                continue
            j += 1
            lower, upper = bounds[(scene, label)]
            if score > upper:
                p += 1
            elif score < lower:
                q += 1
        total = p + q
        is_rejected = (j > 0 and total / j > SCREEN_RATIO_LIMIT
                       and abs(p - q) / total < SCREEN_ASYMMETRY_LIMIT)
        diagnostics.append(ObserverDiagnostic(observer, p, q, j, is_rejected))
        if is_rejected:
            rejected.append(observer)

    return matrix.without_observers(rejected), rejected, diagnostics


def remove_bias(matrix: ScoreMatrix) -> ScoreMatrix:
    """Single-pass per-observer bias subtraction.

    b_i is the observer's mean deviation from the per-(scene, config)
    means; every score of observer i is shifted by -b_i. On complete
    matrices the biases sum to zero, so per-configuration means survive.
    """
    means = {key: float(np.mean(matrix.population(*key))) for key in matrix.populations}
    biases: dict[str, float] = {}
    for observer in matrix.observers:
        deviations = [score - means[(scene, label)]
                      for (obs, scene, label), score in matrix.items() if obs == observer]
        biases[observer] = float(np.mean(deviations)) if deviations else 0.0
    return ScoreMatrix({(obs, scene, label): score - biases[obs]
                        for (obs, scene, label), score in matrix.items()})


@dataclass(frozen=True)
class DmosResult:
    """DMOS of one configuration with its 95% confidence interval."""

    scene_id: str
    config_label: str
    dmos: float
    stddev: float
    ci95_half_width: float
    n: int

    @property
    def ci(self) -> tuple[float, float]:
        return (self.dmos - self.ci95_half_width, self.dmos + self.ci95_half_width)


def dmos_of_population(values: np.ndarray, scene: str = "", label: str = "") -> DmosResult:
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < 2:
        raise ValueError(f"{scene}/{label}: DMOS needs at least 2 observers, got {n}")
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1))
    return DmosResult(scene, label, mean, std, 1.96 * std / math.sqrt(n), n)


def dmos(matrix: ScoreMatrix) -> list[DmosResult]:
    """DMOS, sample standard deviation and 1.96/sqrt(n) CI per configuration."""
    return [dmos_of_population(matrix.population(scene, label), scene, label)
            for scene, label in matrix.populations]


@dataclass(frozen=True)
class TTestResult:
    t: float
    dof: float
    p: float
    degenerate: bool = False


def _student_sf(t_abs: float, dof: float) -> float:
    """Upper-tail probability of the t distribution via the regularized
    incomplete beta function: 2*sf(|t|) = I_{v/(v+t^2)}(v/2, 1/2)."""
    x = dof / (dof + t_abs * t_abs)
    return 0.5 * float(betainc(dof / 2.0, 0.5, x))


def welch_t_test(sample1, sample2) -> TTestResult:
    """Two-sample unequal-variance t-test with a two-tailed p-value.

    Degenerate inputs (both variances zero) fall back to the convention
    p = 1 for equal means and p = 0 otherwise, flagged in the result.
    """
    a = np.asarray(sample1, dtype=np.float64)
    b = np.asarray(sample2, dtype=np.float64)
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("each sample needs at least 2 values")
    m1, m2 = float(np.mean(a)), float(np.mean(b))
    v1, v2 = float(np.var(a, ddof=1)), float(np.var(b, ddof=1))
    se1, se2 = v1 / n1, v2 / n2
    denom_sq = se1 + se2
    if denom_sq == 0.0:
        fallback_dof = float(n1 + n2 - 2)
        if m1 == m2:
            return TTestResult(0.0, fallback_dof, 1.0, degenerate=True)
        return TTestResult(math.copysign(math.inf, m1 - m2), fallback_dof, 0.0,
                           degenerate=True)
    t = (m1 - m2) / math.sqrt(denom_sq)
    dof = denom_sq ** 2 / (se1 ** 2 / (n1 - 1) + se2 ** 2 / (n2 - 1))
    p = 2.0 * _student_sf(abs(t), dof)
    return TTestResult(t, dof, min(p, 1.0))


@dataclass
class SignificanceGrid:
    """Pairwise p-value grid for one scene, in the fixed report layout."""

    scene_id: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    p: np.ndarray
    t: np.ndarray
    degenerate: np.ndarray

    def significant(self, alpha: float = 0.05) -> np.ndarray:
        return self.p < alpha


def significance_matrix(matrix: ScoreMatrix, scene: str,
                        row_labels: tuple[str, ...] = GRID_ROW_LABELS,
                        col_labels: tuple[str, ...] = GRID_COL_LABELS) -> SignificanceGrid:
    """Welch-test every (row config, column config) pair for one scene."""
    available = set(matrix.labels(scene))
    missing = [l for l in set(row_labels) | set(col_labels) if l not in available]
    if missing:
        raise ValueError(f"scene {scene!r}: no score population for {sorted(missing)}")
    populations = {label: matrix.population(scene, label)
                   for label in set(row_labels) | set(col_labels)}
    shape = (len(row_labels), len(col_labels))
    p = np.empty(shape)
    t = np.empty(shape)
    degenerate = np.zeros(shape, dtype=bool)
    for i, row in enumerate(row_labels):
        for j, col in enumerate(col_labels):
            result = welch_t_test(populations[row], populations[col])
            p[i, j] = result.p
            t[i, j] = result.t
            degenerate[i, j] = result.degenerate
    return SignificanceGrid(scene, tuple(row_labels), tuple(col_labels), p, t, degenerate)
