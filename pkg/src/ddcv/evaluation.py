"""Disparity accuracy metrics and confidence-quality evaluation.

Accuracy metrics (EPE, percentage of erroneous pixels, D1) aggregate the
per-pixel absolute error over pixels valid in both maps. Confidence quality
is scored by sparsification: pixels are retained in descending confidence
order and the retained-subset EPE is sampled on a density grid; the area
under that curve (lower is better) is compared against the oracle curve
obtained by sorting on the true error itself.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import DegenerateInputError, ScalarMap


@dataclass(frozen=True)
class DisparityMetrics:
    epe: float
    pep: dict
    d1: float


@dataclass(frozen=True)
class SparsificationCurve:
    samples: tuple  # ((density, epe), ...) with density strictly increasing
    auc: float


def _shared_errors(est: ScalarMap, gt: ScalarMap):
    if est.shape != gt.shape:
        raise ValueError("estimate and ground truth dimensions differ")
    mask = est.valid & gt.valid
    if not mask.any():
        raise DegenerateInputError("no pixels valid in both maps")
    return np.abs(est.values[mask] - gt.values[mask]), gt.values[mask]


def epe(est: ScalarMap, gt: ScalarMap) -> float:
    """Mean absolute disparity error over shared valid pixels."""
    err, _ = _shared_errors(est, gt)
    return float(err.mean())


def pep(est: ScalarMap, gt: ScalarMap, delta: float) -> float:
    """Percentage of shared valid pixels with error above delta pixels."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    err, _ = _shared_errors(est, gt)
    return float(100.0 * (err > delta).mean())


def d1(est: ScalarMap, gt: ScalarMap) -> float:
    """Percentage of pixels whose error exceeds both 3 px and 5% of truth."""
    err, g = _shared_errors(est, gt)
    return float(100.0 * ((err > 3.0) & (err > 0.05 * g)).mean())


def disparity_metrics(est: ScalarMap, gt: ScalarMap, deltas=(1.0, 2.0, 3.0)) -> DisparityMetrics:
    return DisparityMetrics(
        epe=epe(est, gt),
        pep={float(t): pep(est, gt, t) for t in deltas},
        d1=d1(est, gt),
    )


def _prefix_curve(err_sorted: np.ndarray, steps: int):
    """Retained-subset EPE at densities i/steps, i = 1..steps, using prefix
    sums of the already-ordered error vector."""
    n = err_sorted.shape[0]
    csum = np.cumsum(err_sorted)
    counts = np.array([math.ceil(i * n / steps) for i in range(1, steps + 1)])
    densities = np.arange(1, steps + 1) / steps
    epes = csum[counts - 1] / counts
    return densities, epes


def _auc(densities, epes) -> float:
    """Trapezoidal area times 100, with the first sampled EPE extended
    flat back to density 0."""
    d = np.concatenate(([0.0], densities))
    e = np.concatenate(([epes[0]], epes))
    return float(100.0 * np.trapezoid(e, d))


def sparsification(est: ScalarMap, gt: ScalarMap, C: ScalarMap, steps: int = 100) -> SparsificationCurve:
    """Density-EPE curve under descending-confidence retention.

    Ties in confidence fall back to row-major pixel order. Requires at
    least `steps` counted pixels so every density level is distinct.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if est.shape != gt.shape or est.shape != C.shape:
        raise ValueError("map dimensions differ")
    mask = est.valid & gt.valid & C.valid
    if not mask.any():
        raise DegenerateInputError("no pixels valid in all maps")
    err = np.abs(est.values[mask] - gt.values[mask])
    if err.shape[0] < steps:
        raise DegenerateInputError("fewer counted pixels than density steps")
    order = np.argsort(-C.values[mask], kind="stable")
    densities, epes = _prefix_curve(err[order], steps)
    return SparsificationCurve(
        samples=tuple(zip(densities.tolist(), epes.tolist())),
        auc=_auc(densities, epes),
    )


def optimal_auc(est: ScalarMap, gt: ScalarMap, steps: int = 100) -> float:
    """AUC of the oracle curve that retains pixels in ascending true error."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    err, _ = _shared_errors(est, gt)
    if err.shape[0] < steps:
        raise DegenerateInputError("fewer counted pixels than density steps")
    densities, epes = _prefix_curve(np.sort(err, kind="stable"), steps)
    return _auc(densities, epes)


def time_per_megapixel(f, n_pixels: int, repetitions: int = 10) -> float:
    """Median wall-clock time of f(), in milliseconds per 1e6 pixels."""
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return float(np.median(times) * 1e3 * 1e6 / n_pixels)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def curve_csv(curve: SparsificationCurve) -> str:
    lines = ["density,epe"]
    for dens, e in curve.samples:
        lines.append(f"{dens!r},{e!r}")
    return "\n".join(lines) + "\n"


def metrics_csv(rows) -> str:
    """rows: iterable of (metric name, value)."""
    lines = ["metric,value"]
    for name, value in rows:
        lines.append(f"{name},{value!r}")
    return "\n".join(lines) + "\n"
