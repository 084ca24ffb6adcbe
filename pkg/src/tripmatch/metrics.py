"""Spatio-temporal similarity scores and trajectory distance metrics.

Every function here operates on scaled point sequences: arrays of shape
(n, 3) with columns (x, y, t) in [0, 1], as produced by model.scale_trip.
Individual points are any 3-sequences (x, y, t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .model import ScaleContext


class TimeMode(Enum):
    """How the point-pair time term is taken.

    ABSOLUTE uses |t1 - t2| everywhere. SIGNED_CAR takes t2 - t1 at
    origins and t1 - t2 at destinations, so a second trip nested inside
    the first trip's time window scores high. SIGNED_CP is its transpose
    (the signed roles swapped). Interior points always use |t1 - t2|.
    """

    ABSOLUTE = "absolute"
    SIGNED_CAR = "signed_car"
    SIGNED_CP = "signed_cp"


class PointRole(Enum):
    ORIGIN = "origin"
    DESTINATION = "destination"
    INTERIOR = "interior"


@dataclass(frozen=True, slots=True)
class WgmWeights:
    """Geometric-mean weights for the spatial and temporal similarity terms.

    Only the ratio matters: scaling both weights by a positive constant
    leaves every score unchanged.
    """

    w_space: float
    w_time: float

    def __post_init__(self) -> None:
        if self.w_space < 0 or self.w_time < 0:
            raise ValueError("weights must be nonnegative")
        if self.w_space + self.w_time <= 0:
            raise ValueError("weights must not both be zero")


DEFAULT_WEIGHTS = WgmWeights(0.6, 0.4)
TIME_HEAVY_WEIGHTS = WgmWeights(0.1, 0.9)


@dataclass(frozen=True, slots=True)
class MetricParams:
    """Thresholds and modes for the comparison metrics.

    eps_space/eps_time are in scaled units. dtw_cost_mode is "distance"
    or "distance_times_time".
    """

    eps_space: float
    eps_time: float
    dtw_cost_mode: str = "distance"

    def __post_init__(self) -> None:
        if self.eps_space <= 0 or self.eps_time <= 0:
            raise ValueError("matching thresholds must be positive")
        if self.dtw_cost_mode not in ("distance", "distance_times_time"):
            raise ValueError(f"unknown dtw cost mode {self.dtw_cost_mode!r}")

    @classmethod
    def for_context(
        cls,
        ctx: ScaleContext,
        dist_threshold: float = 1800.0,
        time_threshold: float = 900.0,
        dtw_cost_mode: str = "distance",
    ) -> "MetricParams":
        """Scaled equivalents of raw meter/second thresholds.

        The spatial epsilon divides by the larger of the two axis spans,
        the conservative choice when the bounding box is not square.
        """
        return cls(
            eps_space=dist_threshold / max(ctx.x_span, ctx.y_span),
            eps_time=time_threshold / ctx.t_span,
            dtw_cost_mode=dtw_cost_mode,
        )


def _xy_dist(p: Sequence[float], q: Sequence[float]) -> float:
    """Euclidean distance of two points in the scaled x-y plane."""
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _time_term(t1: float, t2: float, mode: TimeMode, role: PointRole) -> float:
    """Signed or absolute time difference; may be negative under signed modes."""
    if mode is TimeMode.ABSOLUTE or role is PointRole.INTERIOR:
        return abs(t1 - t2)
    if mode is TimeMode.SIGNED_CAR:
        return t2 - t1 if role is PointRole.ORIGIN else t1 - t2
    return t1 - t2 if role is PointRole.ORIGIN else t2 - t1


def psim(
    p1: Sequence[float],
    p2: Sequence[float],
    w: WgmWeights = DEFAULT_WEIGHTS,
    mode: TimeMode = TimeMode.ABSOLUTE,
    role: PointRole = PointRole.INTERIOR,
) -> float:
    """Point similarity: the weighted geometric mean of space and time terms.

    With d the scaled x-y distance and tau the time term (negative signed
    values clamp to 0), returns

        exp((w_s * ln(1/(1+d)) + w_t * ln(1/(1+tau))) / (w_s + w_t))

    which lies in (0, 1] and equals 1 only for d = 0 and tau <= 0.
    """
    d = _xy_dist(p1, p2)
    tau = max(_time_term(float(p1[2]), float(p2[2]), mode, role), 0.0)
    exponent = (
        w.w_space * math.log(1.0 / (1.0 + d)) + w.w_time * math.log(1.0 / (1.0 + tau))
    ) / (w.w_space + w.w_time)
    return math.exp(exponent)


def _role_of(i: int, n: int) -> PointRole:
    if i == 0:
        return PointRole.ORIGIN
    if i == n - 1:
        return PointRole.DESTINATION
    return PointRole.INTERIOR


def wgm_sim(
    t1: np.ndarray,
    t2: np.ndarray,
    w: WgmWeights = DEFAULT_WEIGHTS,
    mode: TimeMode = TimeMode.ABSOLUTE,
) -> float:
    """Trip similarity: the mean of point-wise psim over aligned waypoints.

    Both sequences must have the same length n; the cost is exactly n psim
    evaluations (linear in the number of waypoints). The first pair is
    scored as origins, the last as destinations.
    """
    n = len(t1)
    if n != len(t2):
        raise ValueError(f"sequences must have equal length, got {n} and {len(t2)}")
    if n < 1:
        raise ValueError("sequences must not be empty")
    total = 0.0
    for i in range(n):
        total += psim(t1[i], t2[i], w, mode, _role_of(i, n))
    return total / n


def car_score(rider: np.ndarray, ride: np.ndarray, w: WgmWeights = DEFAULT_WEIGHTS) -> float:
    """Catch-a-ride score: how well `ride` fits inside `rider`'s window.

    Signed time terms reward rides that start after the rider starts and
    end before the rider ends; use car_feasible for the hard constraint.
    """
    return wgm_sim(rider, ride, w, TimeMode.SIGNED_CAR)


def car_feasible(rider: np.ndarray, ride: np.ndarray) -> bool:
    """True when the ride starts at/after the rider and ends at/before it."""
    return bool(ride[0][2] >= rider[0][2] and ride[-1][2] <= rider[-1][2])


def cp_score(a: np.ndarray, b: np.ndarray, w: WgmWeights = DEFAULT_WEIGHTS) -> float:
    """Carpool score, the transpose of the catch-a-ride score.

    cp_score(a, b) == car_score(b, a): high when a's window nests inside
    b's, i.e. the driver b can pick up and drop off a and still arrive
    at its own destination on time.
    """
    return car_score(b, a, w)


def cp_feasible(a: np.ndarray, b: np.ndarray) -> bool:
    """Transpose of car_feasible: b's window must contain a's."""
    return car_feasible(b, a)


def lcss(t1: np.ndarray, t2: np.ndarray, params: MetricParams) -> int:
    """Longest common subsequence length under space/time match thresholds.

    Two points match when their scaled x-y distance is within
    params.eps_space and their time difference within params.eps_time.
    Classic O(m*n) dynamic program; returns a count in [0, min(m, n)].
    """
    m, n = len(t1), len(t2)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        p = t1[i - 1]
        for j in range(1, n + 1):
            q = t2[j - 1]
            if _xy_dist(p, q) <= params.eps_space and abs(p[2] - q[2]) <= params.eps_time:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[m][n]


def dtw(t1: np.ndarray, t2: np.ndarray, cost_mode: str = "distance") -> float:
    """Dynamic time warping distance between two scaled sequences.

    Cell cost is the scaled x-y distance, or distance * |dt| in mode
    "distance_times_time". Steps are the usual (i-1,j), (i,j-1), (i-1,j-1);
    no warping-window constraint. O(m*n) time and space.
    """
    m, n = len(t1), len(t2)
    if m < 1 or n < 1:
        raise ValueError("dtw requires non-empty sequences")
    if cost_mode not in ("distance", "distance_times_time"):
        raise ValueError(f"unknown dtw cost mode {cost_mode!r}")
    with_time = cost_mode == "distance_times_time"
    inf = float("inf")
    prev = [inf] * (n + 1)
    prev[0] = 0.0
    for i in range(1, m + 1):
        p = t1[i - 1]
        cur = [inf] * (n + 1)
        for j in range(1, n + 1):
            q = t2[j - 1]
            cost = _xy_dist(p, q)
            if with_time:
                cost *= abs(p[2] - q[2])
            cur[j] = cost + min(prev[j], cur[j - 1], prev[j - 1])
        prev = cur
    return prev[n]


def frechet_discrete(t1: np.ndarray, t2: np.ndarray) -> float:
    """Discrete Frechet distance (coupled max of pointwise x-y distances).

    c(i,j) = max(d(i,j), min(c(i-1,j), c(i,j-1), c(i-1,j-1))), filled over
    the full m x n table.
    """
    m, n = len(t1), len(t2)
    if m < 1 or n < 1:
        raise ValueError("frechet requires non-empty sequences")
    inf = float("inf")
    prev = [inf] * (n + 1)
    prev[0] = 0.0  # c(0,0) anchor; every other border cell is unreachable
    for i in range(1, m + 1):
        p = t1[i - 1]
        cur = [inf] * (n + 1)
        for j in range(1, n + 1):
            q = t2[j - 1]
            cur[j] = max(_xy_dist(p, q), min(prev[j], cur[j - 1], prev[j - 1]))
        prev = cur
    return prev[n]


def laplacian_kernel(score: float, gamma: float = 3.0) -> float:
    """exp(-gamma * (1 - score)): sharpens similarity contrast near 1."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return math.exp(-gamma * (1.0 - score))
