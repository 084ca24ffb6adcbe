"""Distribution fitting, correlation, empirical CDFs, and spatial grid aggregates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import ScaleContext, Trip


class DegenerateFitError(ValueError):
    """Raised when samples carry no usable variation for a fit."""


@dataclass(frozen=True, slots=True)
class FitResult:
    """A fitted distribution: family, its two parameters, and the fit quality.

    params is (mu, sigma) for "lognormal" and (shape, scale) for "gamma".
    """

    family: str
    params: tuple[float, float]
    log_likelihood: float
    n: int


# Bernoulli numbers B_2..B_16 for the asymptotic psi series.
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def digamma(x: float) -> float:
    """Digamma psi(x) for x > 0.

    Shifts x above 6 with psi(x) = psi(x+1) - 1/x, then evaluates the
    asymptotic series ln x - 1/(2x) - sum B_2n / (2n x^2n). Accurate to
    about 1e-13 absolute.
    """
    if x <= 0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    result = math.log(x) - 0.5 / x
    term = inv2
    for n, b in enumerate(_BERNOULLI, start=1):
        result -= b / (2 * n) * term
        term *= inv2
    return result + acc


def trigamma(x: float) -> float:
    """Trigamma psi'(x) for x > 0, via psi'(x) = psi'(x+1) + 1/x^2 and series."""
    if x <= 0:
        raise ValueError(f"trigamma requires x > 0, got {x}")
    acc = 0.0
    while x < 6.0:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    result = inv + 0.5 * inv2
    term = inv * inv2
    for b in _BERNOULLI:
        result += b * term
        term *= inv2
    return result + acc


def _validated_positive(samples: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("need at least 2 one-dimensional samples")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("samples must be positive and finite")
    return arr


def fit_lognormal(samples: Sequence[float] | np.ndarray) -> FitResult:
    """Maximum-likelihood lognormal fit: mu/sigma are the mean/std of ln(x)."""
    arr = _validated_positive(samples)
    logs = np.log(arr)
    mu = float(logs.mean())
    sigma = float(np.sqrt(((logs - mu) ** 2).mean()))
    if sigma == 0.0:
        raise DegenerateFitError("log-samples have zero variance")
    n = arr.size
    loglik = float(
        -logs.sum() - n * math.log(sigma) - 0.5 * n * math.log(2 * math.pi)
        - ((logs - mu) ** 2).sum() / (2 * sigma * sigma)
    )
    return FitResult("lognormal", (mu, sigma), loglik, n)


def fit_gamma(samples: Sequence[float] | np.ndarray, max_iter: int = 100) -> FitResult:
    """Maximum-likelihood gamma fit.

    Solves ln(k) - psi(k) = ln(mean) - mean(ln x) for the shape k by Newton
    iteration from the standard closed-form initial guess, then sets
    scale = mean / k. Converges when |step| < 1e-10 * k.
    """
    arr = _validated_positive(samples)
    mean = float(arr.mean())
    mean_log = float(np.log(arr).mean())
    s = math.log(mean) - mean_log
    if s <= 0:
        raise DegenerateFitError("samples have no log-dispersion; gamma fit undefined")
    k = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(max_iter):
        step = (math.log(k) - digamma(k) - s) / (1.0 / k - trigamma(k))
        new_k = k - step
        if new_k <= 0:
            new_k = k / 2.0
        k, done = new_k, abs(step) < 1e-10 * k
        if done:
            break
    theta = mean / k
    n = arr.size
    loglik = float(
        (k - 1.0) * np.log(arr).sum() - arr.sum() / theta
        - n * k * math.log(theta) - n * math.lgamma(k)
    )
    return FitResult("gamma", (k, theta), loglik, n)


def pearson(xs: Sequence[float] | np.ndarray, ys: Sequence[float] | np.ndarray) -> float:
    """Sample Pearson correlation coefficient of two equal-length sequences."""
    a = np.asarray(xs, dtype=float)
    b = np.asarray(ys, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length 1-d sequences with n >= 2")
    da = a - a.mean()
    db = b - b.mean()
    va = float((da * da).sum())
    vb = float((db * db).sum())
    if va == 0.0 or vb == 0.0:
        raise ValueError("correlation undefined: a sequence has zero variance")
    return float((da * db).sum() / math.sqrt(va * vb))


def empirical_cdf(samples: Sequence[float] | np.ndarray) -> list[tuple[float, float]]:
    """Empirical CDF as (value, P[X <= value]) steps; tied values collapse."""
    arr = np.asarray(samples, dtype=float)
    if arr.size < 1:
        raise ValueError("need at least one sample")
    values, counts = np.unique(arr, return_counts=True)
    probs = np.cumsum(counts) / arr.size
    return [(float(v), float(p)) for v, p in zip(values, probs)]


@dataclass(frozen=True, slots=True)
class GridStats:
    """A rows x cols spatial aggregate over the scale-context bounding box.

    kind "unique_count": values has shape (rows, cols) of distinct-trip
    counts. kind "duration_quartiles": values has shape (rows, cols, 5)
    holding (min, q1, median, q3, max) with NaN rows marking empty cells.
    """

    rows: int
    cols: int
    kind: str
    values: np.ndarray


def _cell_of(x: float, y: float, ctx: ScaleContext, rows: int, cols: int) -> tuple[int, int]:
    # Points on or past the upper bound clamp into the last cell.
    col = int((x - ctx.x_min) / ctx.x_span * cols)
    row = int((y - ctx.y_min) / ctx.y_span * rows)
    return min(max(row, 0), rows - 1), min(max(col, 0), cols - 1)


def grid_unique_counts(
    trips: Iterable[Trip], ctx: ScaleContext, rows: int, cols: int
) -> GridStats:
    """Distinct trips touching each grid cell; revisits by a trip count once."""
    if rows < 1 or cols < 1:
        raise ValueError("grid must have at least one row and column")
    counts = np.zeros((rows, cols), dtype=int)
    for trip in trips:
        cells = {_cell_of(w.x, w.y, ctx, rows, cols) for w in trip.waypoints}
        for r, c in cells:
            counts[r, c] += 1
    return GridStats(rows, cols, "unique_count", counts)


def grid_duration_stats(
    trips: Iterable[Trip], ctx: ScaleContext, rows: int, cols: int
) -> GridStats:
    """Duration five-number summary per origin cell (NaN-filled when empty)."""
    if rows < 1 or cols < 1:
        raise ValueError("grid must have at least one row and column")
    buckets: dict[tuple[int, int], list[float]] = {}
    for trip in trips:
        cell = _cell_of(trip.origin.x, trip.origin.y, ctx, rows, cols)
        buckets.setdefault(cell, []).append(trip.duration)
    values = np.full((rows, cols, 5), np.nan)
    for (r, c), durations in buckets.items():
        values[r, c] = np.percentile(durations, [0, 25, 50, 75, 100])
    return GridStats(rows, cols, "duration_quartiles", values)
