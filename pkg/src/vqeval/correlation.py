"""Metric-to-opinion correlation: logistic mapping plus rank statistics.

Objective scores are mapped to the opinion scale through a four-parameter
logistic fitted by damped least squares; PLCC and RMSE are computed on the
fitted scores while SROCC and KROCC operate on the raw values, the usual
convention for metric benchmarking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FIT_MAX_ITERATIONS = 10_000
FIT_RELATIVE_TOLERANCE = 1e-10


@dataclass
class LogisticParams:
    """f(x) = beta2 + (beta1 - beta2) / (1 + exp(-(x - beta3) / |beta4|))."""

    beta1: float
    beta2: float
    beta3: float
    beta4: float

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        span = self.beta1 - self.beta2
        if span == 0.0 or self.beta4 == 0.0:
            return np.full_like(x, (self.beta1 + self.beta2) / 2.0)
        z = -(x - self.beta3) / abs(self.beta4)
        # exp is clipped against overflow; the tails saturate anyway
        return self.beta2 + span / (1.0 + np.exp(np.clip(z, -700.0, 700.0)))


@dataclass
class LogisticFit:
    params: LogisticParams
    sse: float
    n_iterations: int
    converged: bool
    sse_trace: list[float] = field(default_factory=list)


def _pack(p: LogisticParams) -> np.ndarray:
    return np.array([p.beta1, p.beta2, p.beta3, p.beta4])


def _unpack(v: np.ndarray) -> LogisticParams:
    return LogisticParams(*(float(x) for x in v))


def _jacobian(params: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Numeric Jacobian of f(xs) wrt the four parameters (central differences)."""
    jac = np.empty((len(xs), 4))
    for j in range(4):
        h = 1e-6 * max(1.0, abs(params[j]))
        hi, lo = params.copy(), params.copy()
        hi[j] += h
        lo[j] -= h
        jac[:, j] = (_unpack(hi)(xs) - _unpack(lo)(xs)) / (2.0 * h)
    return jac


def fit_logistic(xs: Sequence[float], ys: Sequence[float]) -> LogisticFit:
    """Damped least squares fit of the 4-parameter logistic.

    Start point: beta1 = max(ys), beta2 = min(ys), beta3 = median(xs),
    beta4 = range(xs)/4. Steps are only accepted when they reduce the sum
    of squared errors, so the SSE trace is monotone non-increasing.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 5:
        raise ValueError(f"logistic fit needs at least 5 points, got {len(xs)}")
    if float(np.ptp(xs)) == 0.0:
        raise ValueError("logistic fit requires varying metric scores")

    if float(np.ptp(ys)) == 0.0:
        params = LogisticParams(float(ys[0]), float(ys[0]),
                                float(np.median(xs)), float(np.ptp(xs)) / 4.0)
        return LogisticFit(params, 0.0, 0, True, [0.0])

    beta = np.array([float(np.max(ys)), float(np.min(ys)),
                     float(np.median(xs)), float(np.ptp(xs)) / 4.0])
    residuals = ys - _unpack(beta)(xs)
    sse = float(residuals @ residuals)
    trace = [sse]
    damping = 1e-3
    converged = False
    iterations = 0

    for iterations in range(1, FIT_MAX_ITERATIONS + 1):
        jac = _jacobian(beta, xs)
        jtj = jac.T @ jac
        gradient = jac.T @ residuals
        diag = np.diag(jtj).copy()
        diag[diag == 0.0] = 1.0

        step_taken = False
        for _ in range(40):
            try:
                step = np.linalg.solve(jtj + damping * np.diag(diag), gradient)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            candidate = beta + step
            candidate_res = ys - _unpack(candidate)(xs)
            candidate_sse = float(candidate_res @ candidate_res)
            if candidate_sse <= sse:
                step_taken = True
                break
            damping *= 10.0
        if not step_taken:
            converged = True  # damping exhausted: local minimum to working precision
            break

        previous = sse
        beta, residuals, sse = candidate, candidate_res, candidate_sse
        trace.append(sse)
        damping = max(damping / 10.0, 1e-12)
        if previous - sse <= FIT_RELATIVE_TOLERANCE * max(previous, 1e-300):
            converged = True
            break

    return LogisticFit(_unpack(beta), sse, iterations, converged, trace)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(xs: np.ndarray, ys: np.ndarray) -> float:
    dx = xs - np.mean(xs)
    dy = ys - np.mean(ys)
    sxx = float(np.sum(dx * dx))
    syy = float(np.sum(dy * dy))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance: correlation undefined")
    return float(np.sum(dx * dy)) / math.sqrt(sxx * syy)


def srocc(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation (Pearson over average ranks)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 2:
        raise ValueError("rank correlation needs at least 2 points")
    return _pearson(_average_ranks(xs), _average_ranks(ys))


def krocc(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Kendall rank correlation, tie-corrected (tau-b)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    n = len(xs)
    if n < 2:
        raise ValueError("rank correlation needs at least 2 points")
    sign_x = np.sign(xs[:, None] - xs[None, :])
    sign_y = np.sign(ys[:, None] - ys[None, :])
    upper = np.triu_indices(n, k=1)
    products = sign_x[upper] * sign_y[upper]
    concordant = int(np.sum(products > 0))
    discordant = int(np.sum(products < 0))
    n0 = n * (n - 1) // 2
    ties_x = n0 - int(np.sum(sign_x[upper] != 0))
    ties_y = n0 - int(np.sum(sign_y[upper] != 0))
    denominator = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denominator == 0.0:
        raise ValueError("zero rank variance: tau undefined")
    return (concordant - discordant) / denominator


def plcc_rmse(xs: Sequence[float], ys: Sequence[float],
              fit: LogisticParams) -> tuple[float, float]:
    """Pearson correlation and RMSE between fitted scores f(xs) and ys."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    predicted = fit(xs)
    plcc = _pearson(predicted, ys)
    rmse = math.sqrt(float(np.mean((ys - predicted) ** 2)))
    return plcc, rmse


@dataclass
class CorrelationReport:
    """Per-metric consistency indicators plus the data to plot them."""

    metric_id: str
    srocc: float
    plcc: float
    krocc: float
    rmse: float
    fit: LogisticParams
    residual_std: float  # RMS residual about the fitted curve; band = +/- 2 sigma
    xs: np.ndarray
    ys: np.ndarray
    curve_x: np.ndarray
    curve_y: np.ndarray

    @property
    def band_half_width(self) -> float:
        return 2.0 * self.residual_std


def correlation_report(dmos_records: dict[tuple[str, str], float],
                       metric_records: dict[str, dict[tuple[str, str], float]],
                       include_uncompressed: bool = False,
                       plcc_on_raw: bool = False,
                       curve_samples: int = 200) -> list[CorrelationReport]:
    """One consistency report per metric over the pooled (scene, config) keys.

    dmos_records maps (scene, config label) to DMOS; metric_records maps
    metric_id to a like-keyed table. Keys must match exactly over the
    pooled domain (coded configurations, plus 4K when
    include_uncompressed is set; REF metric values are degenerate and
    always excluded).
    """
    def pooled(label: str) -> bool:
        if label == "REF":
            return False
        if label == "4K":
            return include_uncompressed
        return True

    keys = sorted(k for k in dmos_records if pooled(k[1]))
    reports = []
    for metric_id in sorted(metric_records):
        table = metric_records[metric_id]
        metric_keys = sorted(k for k in table if pooled(k[1]))
        if metric_keys != keys:
            missing = set(keys) ^ set(metric_keys)
            raise ValueError(
                f"metric {metric_id!r}: mismatched (scene, config) keys: {sorted(missing)}")
        xs = np.array([table[k] for k in keys])
        ys = np.array([dmos_records[k] for k in keys])
        fit = fit_logistic(xs, ys)
        if plcc_on_raw:
            plcc = _pearson(xs, ys)
            rmse = math.sqrt(float(np.mean((ys - fit.params(xs)) ** 2)))
        else:
            plcc, rmse = plcc_rmse(xs, ys, fit.params)
        curve_x = np.linspace(float(np.min(xs)), float(np.max(xs)), curve_samples)
        reports.append(CorrelationReport(
            metric_id=metric_id,
            srocc=srocc(xs, ys),
            plcc=plcc,
            krocc=krocc(xs, ys),
            rmse=rmse,
            fit=fit.params,
            residual_std=math.sqrt(float(np.mean((ys - fit.params(xs)) ** 2))),
            xs=xs,
            ys=ys,
            curve_x=curve_x,
            curve_y=fit.params(curve_x),
        ))
    return reports
