"""Threshold-filtered dynamic matching of riders to rides, with trip accounting.

Two scenarios are supported. In "car" mode the request travels to a ride's
origin and from its destination, so the ride must start after and end
before the request. In "carpool" mode the ride detours to serve the
request, so the request's window must nest inside the ride's.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import metrics
from .metrics import MetricParams, WgmWeights
from .model import ScaleContext, Trip, od_rep, path_length, sampled_rep, spatial_distance

#: Metric names accepted by greedy_match and compare_metrics.
METRIC_NAMES = ("wgm", "wgm_time", "lcss", "dtw", "dtw_time", "frechet")


class UndefinedReportError(ValueError):
    """Raised when savings accounting divides by an empty scenario."""


@dataclass(frozen=True, slots=True)
class MatchScenario:
    """Matching mode, filter thresholds (raw meters/seconds), and score knobs."""

    mode: str = "car"
    dist_threshold: float = 1800.0
    time_threshold: float = 900.0
    weights: WgmWeights = metrics.DEFAULT_WEIGHTS
    metric: str = "wgm"

    def __post_init__(self) -> None:
        if self.mode not in ("car", "carpool"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.dist_threshold <= 0 or self.time_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True, slots=True)
class MatchRow:
    """Outcome for one request: the chosen ride and endpoint offsets."""

    request_id: str
    ride_id: str | None
    oo_dist_m: float
    dd_dist_m: float
    oo_time_s: float
    dd_time_s: float
    score: float

    @property
    def matched(self) -> bool:
        return self.ride_id is not None


_UNMATCHED = dict(ride_id=None, oo_dist_m=0.0, dd_dist_m=0.0, oo_time_s=0.0,
                  dd_time_s=0.0, score=0.0)


@dataclass(frozen=True)
class MatchReport:
    """Per-request match rows plus the aggregate accounting fields.

    match_travels_km counts the chosen ride's length once per matched
    request; match_travels_distinct_km counts each chosen ride once
    regardless of how many requests picked it.
    """

    mode: str
    metric: str
    rows: tuple[MatchRow, ...]
    n_requests: int
    n_matched: int
    match_travels_km: float
    match_travels_distinct_km: float
    req_travels_km: float
    req_travels_matched_km: float
    oo_dist_km: float
    dd_dist_km: float
    oo_time_s: float
    dd_time_s: float

    @property
    def match_to_total_ratio(self) -> float:
        total = self.match_travels_km + self.req_travels_km
        return self.match_travels_km / total if total > 0 else 0.0

    @property
    def match_to_total_matched_ratio(self) -> float:
        total = self.match_travels_km + self.req_travels_matched_km
        return self.match_travels_km / total if total > 0 else 0.0

    @property
    def savings(self) -> float:
        return savings_accounting(self)["savings"]

    def to_table_dict(self) -> dict[str, object]:
        """Aggregates keyed by the report table's row labels."""
        return {
            "match travels (km)": round(self.match_travels_km, 3),
            "req travels (km)": round(self.req_travels_km, 3),
            "match to total travel ratio": round(100 * self.match_to_total_ratio, 2),
            "origin-origin distance (km)": round(self.oo_dist_km, 3),
            "dest-dest distance (km)": round(self.dd_dist_km, 3),
            "origin-origin times (sec)": int(round(self.oo_time_s)),
            "dest-dest times (sec)": int(round(self.dd_time_s)),
            "# req with at least a match": self.n_matched,
            "req travels for least a match (km)": round(self.req_travels_matched_km, 3),
            "match to total travel ratio (at least a match)":
                round(100 * self.match_to_total_matched_ratio, 2),
            "match travels distinct (km)": round(self.match_travels_distinct_km, 3),
            "savings": round(100 * self.savings, 2),
            "n requests": self.n_requests,
            "mode": self.mode,
            "metric": self.metric,
        }


def _order_feasible(request: Trip, ride: Trip, mode: str) -> bool:
    if mode == "car":
        return ride.start_time >= request.start_time and ride.end_time <= request.end_time
    return ride.start_time <= request.start_time and ride.end_time >= request.end_time


def _passes_filter(request: Trip, ride: Trip, scenario: MatchScenario) -> bool:
    return (
        spatial_distance(request.origin, ride.origin) <= scenario.dist_threshold
        and spatial_distance(request.destination, ride.destination) <= scenario.dist_threshold
        and abs(request.origin.t - ride.origin.t) <= scenario.time_threshold
        and abs(request.destination.t - ride.destination.t) <= scenario.time_threshold
        and _order_feasible(request, ride, scenario.mode)
    )


def feasible_candidates(
    request: Trip, rides: Sequence[Trip], scenario: MatchScenario
) -> list[Trip]:
    """Rides passing the endpoint distance/time gates and the temporal order."""
    return [ride for ride in rides if _passes_filter(request, ride, scenario)]


def _candidate_indices(
    requests: Sequence[Trip], rides: Sequence[Trip], scenario: MatchScenario
) -> list[list[int]]:
    """Per-request feasible ride indices.

    A vectorized squared-distance prefilter (loosened by 1e-9 so boundary
    cases cannot be lost to rounding) cuts the pair count; survivors are
    confirmed with the exact scalar predicate.
    """
    ox = np.array([r.origin.x for r in rides])
    oy = np.array([r.origin.y for r in rides])
    dx = np.array([r.destination.x for r in rides])
    dy = np.array([r.destination.y for r in rides])
    ot = np.array([r.origin.t for r in rides])
    dt = np.array([r.destination.t for r in rides])
    starts = np.array([r.start_time for r in rides])
    ends = np.array([r.end_time for r in rides])
    sq_limit = scenario.dist_threshold ** 2 * (1.0 + 1e-9)
    t_limit = scenario.time_threshold * (1.0 + 1e-9)

    out = []
    for request in requests:
        o, d = request.origin, request.destination
        mask = (ox - o.x) ** 2 + (oy - o.y) ** 2 <= sq_limit
        mask &= (dx - d.x) ** 2 + (dy - d.y) ** 2 <= sq_limit
        mask &= np.abs(ot - o.t) <= t_limit
        mask &= np.abs(dt - d.t) <= t_limit
        if scenario.mode == "car":
            mask &= (starts >= request.start_time) & (ends <= request.end_time)
        else:
            mask &= (starts <= request.start_time) & (ends >= request.end_time)
        out.append([int(j) for j in np.flatnonzero(mask)
                    if _passes_filter(request, rides[j], scenario)])
    return out


def _metric_fn(
    name: str, scenario: MatchScenario, ctx: ScaleContext
) -> tuple[str, Callable[[np.ndarray, np.ndarray], float]]:
    """Resolve a metric name to ("similarity" | "distance", pair scorer)."""
    pair_score = metrics.car_score if scenario.mode == "car" else metrics.cp_score
    if name == "wgm":
        return "similarity", lambda a, b: pair_score(a, b, scenario.weights)
    if name == "wgm_time":
        return "similarity", lambda a, b: pair_score(a, b, metrics.TIME_HEAVY_WEIGHTS)
    if name == "lcss":
        params = MetricParams.for_context(ctx, scenario.dist_threshold, scenario.time_threshold)
        return "similarity", lambda a, b: float(metrics.lcss(a, b, params))
    if name == "dtw":
        return "distance", lambda a, b: metrics.dtw(a, b, "distance")
    if name == "dtw_time":
        return "distance", lambda a, b: metrics.dtw(a, b, "distance_times_time")
    if name == "frechet":
        return "distance", metrics.frechet_discrete
    raise ValueError(f"unknown metric {name!r}")


def _choose(
    candidates: list[int],
    scores: list[float],
    kind: str,
    rides: Sequence[Trip],
) -> tuple[int, float]:
    """Best candidate for one request; score ties break on the lowest ride id."""
    best_j, best_score = candidates[0], scores[0]
    for j, score in zip(candidates[1:], scores[1:]):
        if kind == "similarity":
            better = score > best_score
        else:
            better = score < best_score
        if better or (score == best_score and rides[j].id < rides[best_j].id):
            best_j, best_score = j, score
    return best_j, best_score


def _build_rows(
    requests: Sequence[Trip],
    rides: Sequence[Trip],
    candidates: list[list[int]],
    reps_req: list[np.ndarray],
    reps_ride: list[np.ndarray],
    kind: str,
    score: Callable[[np.ndarray, np.ndarray], float],
) -> tuple[MatchRow, ...]:
    rows = []
    for i, request in enumerate(requests):
        cands = candidates[i]
        if not cands:
            rows.append(MatchRow(request_id=request.id, **_UNMATCHED))
            continue
        scores = [score(reps_req[i], reps_ride[j]) for j in cands]
        j, best = _choose(cands, scores, kind, rides)
        ride = rides[j]
        rows.append(MatchRow(
            request_id=request.id,
            ride_id=ride.id,
            oo_dist_m=spatial_distance(request.origin, ride.origin),
            dd_dist_m=spatial_distance(request.destination, ride.destination),
            oo_time_s=abs(request.origin.t - ride.origin.t),
            dd_time_s=abs(request.destination.t - ride.destination.t),
            score=best,
        ))
    return tuple(rows)


def _build_report(
    requests: Sequence[Trip],
    rides: Sequence[Trip],
    rows: tuple[MatchRow, ...],
    mode: str,
    metric: str,
) -> MatchReport:
    req_len = {t.id: path_length(t) for t in requests}
    ride_len = {t.id: path_length(t) for t in rides}
    matched = [r for r in rows if r.matched]
    distinct_rides = {r.ride_id for r in matched}
    return MatchReport(
        mode=mode,
        metric=metric,
        rows=rows,
        n_requests=len(rows),
        n_matched=len(matched),
        match_travels_km=sum(ride_len[r.ride_id] for r in matched) / 1000.0,
        match_travels_distinct_km=sum(ride_len[i] for i in distinct_rides) / 1000.0,
        req_travels_km=sum(req_len[r.request_id] for r in rows) / 1000.0,
        req_travels_matched_km=sum(req_len[r.request_id] for r in matched) / 1000.0,
        oo_dist_km=sum(r.oo_dist_m for r in matched) / 1000.0,
        dd_dist_km=sum(r.dd_dist_m for r in matched) / 1000.0,
        oo_time_s=sum(r.oo_time_s for r in matched),
        dd_time_s=sum(r.dd_time_s for r in matched),
    )


def greedy_match(
    requests: Sequence[Trip],
    rides: Sequence[Trip],
    scenario: MatchScenario,
    ctx: ScaleContext | None = None,
    rep_len: int | None = None,
) -> MatchReport:
    """Match every request to its best feasible ride, independently.

    Rides have no capacity limit, so per-request choices are independent
    and a greedy scan is optimal. rep_len=None scores on the scaled OD
    endpoints; otherwise trips are resampled to rep_len waypoints first.
    """
    if ctx is None:
        ctx = ScaleContext.from_trips(list(requests) + list(rides))
    kind, score = _metric_fn(scenario.metric, scenario, ctx)
    if rep_len is None:
        reps_req = [od_rep(t, ctx) for t in requests]
        reps_ride = [od_rep(t, ctx) for t in rides]
    else:
        reps_req = [sampled_rep(t, ctx, rep_len) for t in requests]
        reps_ride = [sampled_rep(t, ctx, rep_len) for t in rides]
    candidates = _candidate_indices(requests, rides, scenario)
    rows = _build_rows(requests, rides, candidates, reps_req, reps_ride, kind, score)
    return _build_report(requests, rides, rows, scenario.mode, scenario.metric)


def savings_accounting(report: MatchReport, mode: str | None = None) -> dict[str, float]:
    """Traveled-kilometer totals with and without sharing, and the saving.

    car: with sharing, matched requests ride along, so the shared total is
    the unmatched request travel plus the match travel. carpool: everyone
    still drives, plus the pick-up and drop-off detours; without sharing
    the match trips would run separately.
    """
    if mode is None:
        mode = report.mode
    without = report.req_travels_km + report.match_travels_km
    if without <= 0:
        raise UndefinedReportError("no traveled kilometers to account for")
    if mode == "car":
        unmatched = report.req_travels_km - report.req_travels_matched_km
        with_sharing = unmatched + report.match_travels_km
    elif mode == "carpool":
        with_sharing = report.req_travels_km + report.oo_dist_km + report.dd_dist_km
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return {
        "with_sharing_km": with_sharing,
        "without_sharing_km": without,
        "savings": 1.0 - with_sharing / without,
    }


def match_counts_curve(
    requests: Sequence[Trip],
    rides: Sequence[Trip],
    scenario: MatchScenario,
    sweep: Sequence[float],
    match_counts: Sequence[int],
    vary: str = "dist",
) -> list[dict[str, float]]:
    """Requests having at least L candidates, per swept threshold value.

    vary selects which threshold the sweep replaces ("dist" or "time");
    the other stays at its scenario value.
    """
    if vary not in ("dist", "time"):
        raise ValueError(f"vary must be 'dist' or 'time', got {vary!r}")
    out = []
    for value in sweep:
        if vary == "dist":
            swept = dataclasses.replace(scenario, dist_threshold=value)
        else:
            swept = dataclasses.replace(scenario, time_threshold=value)
        sizes = [len(c) for c in _candidate_indices(requests, rides, swept)]
        for least in match_counts:
            out.append({
                "vary": vary,
                "threshold": float(value),
                "L": int(least),
                "count": sum(1 for s in sizes if s >= least),
            })
    return out


def compare_metrics(
    requests: Sequence[Trip],
    rides: Sequence[Trip],
    metric_names: Sequence[str],
    scenario: MatchScenario,
    rep_len: int = 50,
    ctx: ScaleContext | None = None,
) -> dict[str, MatchReport]:
    """Run the same matching scenario under several metrics.

    Candidate filtering is metric-independent and computed once, so every
    report shares the request-side aggregates; only the argmax/argmin
    criterion changes. All trips must yield a full rep_len-waypoint
    representation so the aligned-sequence metrics stay comparable.
    """
    if ctx is None:
        ctx = ScaleContext.from_trips(list(requests) + list(rides))
    reps_req = [sampled_rep(t, ctx, rep_len) for t in requests]
    reps_ride = [sampled_rep(t, ctx, rep_len) for t in rides]
    for rep, trip in zip(reps_req + reps_ride, list(requests) + list(rides)):
        if len(rep) != rep_len:
            raise ValueError(
                f"trip {trip.id!r} has only {len(rep)} waypoints; need {rep_len}"
            )
    candidates = _candidate_indices(requests, rides, scenario)
    reports = {}
    for name in metric_names:
        kind, score = _metric_fn(name, scenario, ctx)
        rows = _build_rows(requests, rides, candidates, reps_req, reps_ride, kind, score)
        reports[name] = _build_report(requests, rides, rows, scenario.mode, name)
    return reports
