"""Trace parsing, time-window cutting, trip assembly, and synthetic trip sets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

import numpy as np

from .model import ScaleContext, Trip, Waypoint


class TraceFormatError(ValueError):
    """Raised when a trace stream is too malformed to trust."""


#: Fields a trace format string may name. `id` is the only non-numeric one.
_KNOWN_FIELDS = ("t", "id", "x", "y", "speed")

#: Fraction of malformed lines above which parsing aborts.
_MALFORMED_LIMIT = 0.10


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """One trace line: a vehicle position report."""

    t: float
    id: str
    x: float
    y: float
    speed: float | None = None


@dataclass(frozen=True, slots=True)
class TimeWindow:
    """Half-open analysis window [start, end) in trace seconds."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.end > self.start:
            raise ValueError(f"window end must exceed start, got [{self.start}, {self.end})")

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end


def parse_trace(
    lines: Iterable[str], fmt: str = "t id x y speed"
) -> tuple[list[TraceRecord], int]:
    """Parse a whitespace-separated, line-oriented trace.

    Args:
        lines: iterable of text lines (an open file works).
        fmt: space-separated column names; must include t, id, x, y.
            speed is optional. Lines whose field count differs from the
            format, or whose numeric fields fail to parse, are skipped.

    Returns:
        (records, skipped) where skipped counts malformed lines.

    Raises:
        TraceFormatError: if more than 10% of non-blank lines are malformed.
    """
    fields = fmt.split()
    unknown = set(fields) - set(_KNOWN_FIELDS)
    if unknown:
        raise ValueError(f"unknown trace fields: {sorted(unknown)}")
    if len(set(fields)) != len(fields):
        raise ValueError(f"duplicate trace fields in {fmt!r}")
    for required in ("t", "id", "x", "y"):
        if required not in fields:
            raise ValueError(f"trace format must include {required!r}")
    pos = {name: i for i, name in enumerate(fields)}

    records: list[TraceRecord] = []
    skipped = 0
    total = 0
    for line in lines:
        parts = line.split()
        if not parts:
            continue
        total += 1
        if len(parts) != len(fields):
            skipped += 1
            continue
        try:
            t = float(parts[pos["t"]])
            x = float(parts[pos["x"]])
            y = float(parts[pos["y"]])
            speed = float(parts[pos["speed"]]) if "speed" in pos else None
        except ValueError:
            skipped += 1
            continue
        if not (math.isfinite(t) and math.isfinite(x) and math.isfinite(y)):
            skipped += 1
            continue
        records.append(TraceRecord(t, parts[pos["id"]], x, y, speed))

    if total > 0 and skipped / total > _MALFORMED_LIMIT:
        raise TraceFormatError(
            f"{skipped}/{total} malformed lines exceeds the {_MALFORMED_LIMIT:.0%} limit"
        )
    return records, skipped


def build_trips(records: Iterable[TraceRecord], window: TimeWindow) -> list[Trip]:
    """Group in-window records by vehicle id into time-sorted trips.

    The window is half-open: a record at exactly window.end is dropped.
    Records with equal timestamps keep their input order (stable sort).
    Trips are returned in order of first appearance of their id.
    """
    groups: dict[str, list[TraceRecord]] = {}
    for rec in records:
        if window.contains(rec.t):
            groups.setdefault(rec.id, []).append(rec)
    trips = []
    for trip_id, recs in groups.items():
        recs.sort(key=lambda r: r.t)
        points = tuple(Waypoint(r.x, r.y, r.t, r.speed) for r in recs)
        trips.append(Trip(trip_id, points))
    return trips


@dataclass(frozen=True, slots=True)
class SynthConfig:
    """Parameters for desk-scale synthetic trip sets.

    Durations are gamma(shape, scale) seconds, straight-line displacements
    lognormal(mu, sigma) meters; both chosen to mimic the right-skewed
    marginals of real urban trip data.
    """

    n_trips: int
    bbox: ScaleContext
    gamma_shape: float = 2.0
    gamma_scale: float = 300.0
    lognorm_mu: float = 8.0
    lognorm_sigma: float = 0.6
    waypoints_per_trip: int = 10
    jitter_frac: float = 0.05
    seed: int = 7

    def __post_init__(self) -> None:
        if self.n_trips < 1:
            raise ValueError("n_trips must be >= 1")
        if min(self.gamma_shape, self.gamma_scale, self.lognorm_sigma) <= 0:
            raise ValueError("distribution parameters must be strictly positive")
        if self.waypoints_per_trip < 2:
            raise ValueError("waypoints_per_trip must be >= 2")
        if self.jitter_frac < 0:
            raise ValueError("jitter_frac must be >= 0")


def generate_synthetic(cfg: SynthConfig) -> list[Trip]:
    """Generate a deterministic synthetic trip set.

    Each trip draws a duration and an OD displacement, places its origin
    uniformly in the bbox, picks a heading that keeps the destination in
    bounds, and linearly interpolates intermediate waypoints with a little
    positional jitter. All waypoints stay inside the bbox.

    Raises:
        ValueError: if a drawn displacement exceeds the bbox diagonal or a
            drawn duration exceeds the bbox time span (infeasible config).
    """
    rng = np.random.default_rng(cfg.seed)
    box = cfg.bbox
    trips: list[Trip] = []
    for i in range(cfg.n_trips):
        duration = float(rng.gamma(cfg.gamma_shape, cfg.gamma_scale))
        if duration > box.t_span:
            raise ValueError(
                f"drawn duration {duration:.1f}s exceeds bbox time span {box.t_span:.1f}s"
            )
        displacement = float(rng.lognormal(cfg.lognorm_mu, cfg.lognorm_sigma))
        if displacement > box.diagonal:
            raise ValueError(
                f"drawn displacement {displacement:.1f}m exceeds bbox diagonal {box.diagonal:.1f}m"
            )
        start = box.t_min + float(rng.uniform(0.0, box.t_span - duration))

        for _ in range(10_000):
            ox = float(rng.uniform(box.x_min, box.x_max))
            oy = float(rng.uniform(box.y_min, box.y_max))
            theta = float(rng.uniform(0.0, 2.0 * math.pi))
            dx = ox + displacement * math.cos(theta)
            dy = oy + displacement * math.sin(theta)
            if box.x_min <= dx <= box.x_max and box.y_min <= dy <= box.y_max:
                break
        else:
            raise ValueError("could not place trip endpoints inside the bbox")

        m = cfg.waypoints_per_trip
        ts = np.linspace(start, start + duration, m)
        frac = np.linspace(0.0, 1.0, m)
        xs = ox + frac * (dx - ox)
        ys = oy + frac * (dy - oy)
        if m > 2 and cfg.jitter_frac > 0:
            sigma = cfg.jitter_frac * displacement
            xs[1:-1] += rng.normal(0.0, sigma, m - 2)
            ys[1:-1] += rng.normal(0.0, sigma, m - 2)
            xs[1:-1] = np.clip(xs[1:-1], box.x_min, box.x_max)
            ys[1:-1] = np.clip(ys[1:-1], box.y_min, box.y_max)
        points = tuple(Waypoint(float(x), float(y), float(t)) for x, y, t in zip(xs, ys, ts))
        trips.append(Trip(f"synth-{i:05d}", points))
    return trips


def write_trips_jsonl(trips: Iterable[Trip], sink: IO[str]) -> int:
    """Write trips as line-delimited JSON: {"id": ..., "points": [[t, x, y], ...]}."""
    n = 0
    for trip in trips:
        obj = {"id": trip.id, "points": [[w.t, w.x, w.y] for w in trip.waypoints]}
        sink.write(json.dumps(obj, separators=(",", ":")) + "\n")
        n += 1
    return n


def read_trips_jsonl(source: Iterable[str]) -> Iterator[Trip]:
    """Read trips from the line-delimited JSON format written by write_trips_jsonl."""
    for line in source:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        points = tuple(Waypoint(x, y, t) for t, x, y in obj["points"])
        yield Trip(str(obj["id"]), points)
