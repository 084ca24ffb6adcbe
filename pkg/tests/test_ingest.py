"""Tests for trace parsing, window cutting, and synthetic generation."""

from __future__ import annotations

import io
import math

import numpy as np
import pytest

from tripmatch.ingest import (
    SynthConfig,
    TimeWindow,
    TraceFormatError,
    TraceRecord,
    build_trips,
    generate_synthetic,
    parse_trace,
    read_trips_jsonl,
    write_trips_jsonl,
)
from tripmatch.model import ScaleContext, od_displacement, path_length


class TestParseTrace:
    def test_field_mapping(self):
        records, skipped = parse_trace(["28800.0 veh1 15000.0 12000.0 13.9"])
        assert skipped == 0
        assert records == [TraceRecord(28800.0, "veh1", 15000.0, 12000.0, 13.9)]

    def test_empty_input(self):
        assert parse_trace([]) == ([], 0)

    def test_wrong_arity_skipped(self):
        lines = [f"{t}.0 v{t} 1.0 2.0 3.0" for t in range(20)] + ["1.0 v9 2.0 3.0"]
        records, skipped = parse_trace(lines)
        assert skipped == 1
        assert len(records) == 20

    def test_non_numeric_skipped(self):
        lines = [f"{t}.0 v 1.0 2.0 3.0" for t in range(20)] + ["oops v 1.0 2.0 3.0"]
        _, skipped = parse_trace(lines)
        assert skipped == 1

    def test_blank_lines_ignored(self):
        records, skipped = parse_trace(["", "   ", "1.0 v 2.0 3.0 4.0", "\n"])
        assert skipped == 0 and len(records) == 1

    def test_too_many_malformed_lines(self):
        lines = ["good 1"] * 3 + ["1.0 v 2.0 3.0 4.0"] * 7
        with pytest.raises(TraceFormatError):
            parse_trace(lines)

    def test_custom_field_order(self):
        records, _ = parse_trace(["v7 5.0 6.0 100.5"], fmt="id x y t")
        assert records[0] == TraceRecord(100.5, "v7", 5.0, 6.0, None)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            parse_trace([], fmt="t id x y z")

    def test_duplicate_field_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_trace([], fmt="t t x y id")

    def test_missing_required_field_rejected(self):
        with pytest.raises(ValueError, match="must include"):
            parse_trace([], fmt="t id x speed")

    def test_ids_stay_strings(self):
        records, _ = parse_trace(["1.0 007 2.0 3.0 4.0"])
        assert records[0].id == "007"

    def test_file_stream(self):
        stream = io.StringIO("1.0 a 2.0 3.0 4.0\n2.0 a 2.5 3.5 4.0\n")
        records, _ = parse_trace(stream)
        assert len(records) == 2


class TestBuildTrips:
    def test_grouping_and_sorting(self):
        records = [
            TraceRecord(30.0, "A", 3.0, 3.0, None),
            TraceRecord(10.0, "A", 1.0, 1.0, None),
            TraceRecord(20.0, "A", 2.0, 2.0, None),
            TraceRecord(15.0, "B", 9.0, 9.0, None),
        ]
        trips = build_trips(records, TimeWindow(0, 3600))
        by_id = {t.id: t for t in trips}
        assert [w.t for w in by_id["A"].waypoints] == [10.0, 20.0, 30.0]
        assert len(by_id["B"].waypoints) == 1

    def test_half_open_window(self):
        records = [TraceRecord(3600.0, "A", 0.0, 0.0, None),
                   TraceRecord(0.0, "B", 0.0, 0.0, None)]
        trips = build_trips(records, TimeWindow(0, 3600))
        assert [t.id for t in trips] == ["B"]

    def test_stable_order_on_time_ties(self):
        records = [TraceRecord(5.0, "A", float(i), 0.0, None) for i in range(4)]
        (trip,) = build_trips(records, TimeWindow(0, 10))
        assert [w.x for w in trip.waypoints] == [0.0, 1.0, 2.0, 3.0]

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            TimeWindow(10, 10)


class TestGenerateSynthetic:
    BOX = ScaleContext(0, 20_000, 0, 20_000, 0, 86_400)

    def test_deterministic_for_seed(self):
        cfg = SynthConfig(n_trips=25, bbox=self.BOX, lognorm_mu=7.5, seed=3)
        a, b = io.StringIO(), io.StringIO()
        write_trips_jsonl(generate_synthetic(cfg), a)
        write_trips_jsonl(generate_synthetic(cfg), b)
        assert a.getvalue() == b.getvalue()

    def test_different_seeds_differ(self):
        base = dict(n_trips=25, bbox=self.BOX, lognorm_mu=7.5)
        a = generate_synthetic(SynthConfig(seed=1, **base))
        b = generate_synthetic(SynthConfig(seed=2, **base))
        assert a != b

    def test_single_two_point_trip(self):
        cfg = SynthConfig(n_trips=1, bbox=self.BOX, lognorm_mu=7.5,
                          waypoints_per_trip=2, seed=0)
        (trip,) = generate_synthetic(cfg)
        assert len(trip.waypoints) == 2

    def test_all_waypoints_inside_bbox(self):
        cfg = SynthConfig(n_trips=50, bbox=self.BOX, lognorm_mu=7.5, seed=5)
        for trip in generate_synthetic(cfg):
            for w in trip.waypoints:
                assert 0 <= w.x <= 20_000 and 0 <= w.y <= 20_000
                assert 0 <= w.t <= 86_400

    def test_positive_duration_and_displacement_bound(self):
        cfg = SynthConfig(n_trips=50, bbox=self.BOX, lognorm_mu=7.5, seed=6)
        for trip in generate_synthetic(cfg):
            assert trip.duration > 0
            assert od_displacement(trip) <= path_length(trip) + 1e-9

    def test_duration_mean_matches_gamma(self):
        # big box so that no draw can trip the feasibility guards
        box = ScaleContext(0, 100_000, 0, 100_000, 0, 86_400)
        cfg = SynthConfig(n_trips=10_000, bbox=box, gamma_shape=2.0,
                          gamma_scale=300.0, waypoints_per_trip=2, seed=42)
        durations = np.array([t.duration for t in generate_synthetic(cfg)])
        target = 2.0 * 300.0
        stderr = 300.0 * math.sqrt(2.0 / 10_000)
        assert abs(durations.mean() - target) < 3 * stderr

    def test_infeasible_displacement(self):
        tiny = ScaleContext(0, 100, 0, 100, 0, 86_400)
        cfg = SynthConfig(n_trips=10, bbox=tiny, lognorm_mu=8.0, seed=0)
        with pytest.raises(ValueError, match="displacement"):
            generate_synthetic(cfg)

    def test_infeasible_duration(self):
        short = ScaleContext(0, 20_000, 0, 20_000, 0, 10)
        cfg = SynthConfig(n_trips=10, bbox=short, lognorm_mu=7.5, seed=0)
        with pytest.raises(ValueError, match="duration"):
            generate_synthetic(cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(n_trips=0, bbox=self.BOX)
        with pytest.raises(ValueError):
            SynthConfig(n_trips=1, bbox=self.BOX, gamma_shape=-1.0)
        with pytest.raises(ValueError):
            SynthConfig(n_trips=1, bbox=self.BOX, waypoints_per_trip=1)


class TestJsonl:
    def test_round_trip_exact(self, synth_trips):
        buf = io.StringIO()
        write_trips_jsonl(synth_trips, buf)
        buf.seek(0)
        back = list(read_trips_jsonl(buf))
        assert [t.id for t in back] == [t.id for t in synth_trips]
        for orig, rt in zip(synth_trips, back):
            assert [(w.x, w.y, w.t) for w in rt.waypoints] == \
                [(w.x, w.y, w.t) for w in orig.waypoints]

    def test_hand_written_line(self):
        (trip,) = read_trips_jsonl(['{"id": "a", "points": [[1.0, 2.0, 3.0]]}'])
        assert trip.id == "a"
        assert trip.waypoints[0].t == 1.0 and trip.waypoints[0].x == 2.0
