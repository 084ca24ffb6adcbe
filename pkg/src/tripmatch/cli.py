"""Command-line pipelines: ingest, synth, stats, affinity, cluster, match, compare, carshare.

Every run writes its artifact files plus a run_manifest.json capturing the
effective configuration and input digests; re-running with
--from-manifest reproduces the outputs byte for byte. Each run prints a
one-line JSON summary on stdout and exits 0, or prints a JSON error with a
machine-readable category and exits 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, affinity, carshare, ingest, matching, metrics, model, stats

DEFAULT_SEED = 7
_OUTDIR_ENV = "TRIPMATCH_OUTDIR"

_INPUT_KEYS = ("input", "trips", "requests", "rides")


# ---------------------------------------------------------------------------
# small io helpers

def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, obj: object) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _km(meters: float) -> str:
    return f"{meters / 1000.0:.3f}"


def _sec(seconds: float) -> str:
    return str(int(round(seconds)))


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _load_trips(path: str) -> list[model.Trip]:
    with open(path) as fh:
        trips = list(ingest.read_trips_jsonl(fh))
    if not trips:
        raise ValueError(f"no trips in {path}")
    return trips


def _parse_bbox(text: str) -> model.ScaleContext:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 6:
        raise ValueError("bbox must be x_min,x_max,y_min,y_max,t_min,t_max")
    return model.ScaleContext(*parts)


def _parse_floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_ints(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _weights(cfg: dict) -> metrics.WgmWeights:
    return metrics.WgmWeights(cfg["w_space"], cfg["w_time"])


def _scenario(cfg: dict) -> matching.MatchScenario:
    return matching.MatchScenario(
        mode=cfg["mode"],
        dist_threshold=cfg["dist_threshold"],
        time_threshold=cfg["time_threshold"],
        weights=_weights(cfg),
        metric=cfg.get("metric", "wgm"),
    )


def _manifest(cfg: dict, outdir: Path) -> None:
    inputs = {}
    for key in _INPUT_KEYS:
        value = cfg.get(key)
        if value:
            inputs[value] = _sha256(value)
    _write_json(outdir / "run_manifest.json", {
        "command": cfg["command"],
        "config": {k: v for k, v in cfg.items() if k not in ("config", "from_manifest")},
        "inputs": inputs,
        "version": __version__,
    })


def _split_riders_rides(cfg: dict) -> tuple[list[model.Trip], list[model.Trip]]:
    """Requests/rides from explicit files, or a seeded split of one trip set."""
    if cfg.get("requests") and cfg.get("rides"):
        return _load_trips(cfg["requests"]), _load_trips(cfg["rides"])
    if not cfg.get("trips"):
        raise ValueError("need --requests/--rides or --trips with --n-riders/--n-rides")
    trips = _load_trips(cfg["trips"])
    n_riders, n_rides = cfg["n_riders"], cfg["n_rides"]
    if n_riders < 1 or n_rides < 1:
        raise ValueError("--n-riders and --n-rides must be positive with --trips")
    if n_riders + n_rides > len(trips):
        raise ValueError(
            f"split {n_riders}+{n_rides} exceeds the {len(trips)} available trips"
        )
    order = np.random.default_rng(cfg["seed"]).permutation(len(trips))
    riders = [trips[i] for i in order[:n_riders]]
    rides = [trips[i] for i in order[n_riders:n_riders + n_rides]]
    return riders, rides


def _write_matches_csv(path: Path, report: matching.MatchReport) -> None:
    rows = []
    for r in report.rows:
        if r.matched:
            rows.append([
                r.request_id, r.ride_id, _km(r.oo_dist_m), _km(r.dd_dist_m),
                _sec(r.oo_time_s), _sec(r.dd_time_s), f"{r.score:.6f}",
            ])
        else:
            rows.append([r.request_id, "", "", "", "", "", ""])
    _write_csv(path, ["request_id", "ride_id", "oo_dist_km", "dd_dist_km",
                      "oo_time_s", "dd_time_s", "score"], rows)


# ---------------------------------------------------------------------------
# subcommand handlers: cfg dict in, summary dict out

def cmd_ingest(cfg: dict, outdir: Path) -> dict:
    if not cfg.get("input"):
        raise ValueError("--input is required")
    with open(cfg["input"]) as fh:
        records, skipped = ingest.parse_trace(fh, cfg["format"])
    window = ingest.TimeWindow(cfg["window_start"], cfg["window_end"])
    trips = ingest.build_trips(records, window)
    with open(outdir / "trips.jsonl", "w") as fh:
        ingest.write_trips_jsonl(trips, fh)
    return {"n_records": len(records), "malformed": skipped, "n_trips": len(trips)}


def cmd_synth(cfg: dict, outdir: Path) -> dict:
    synth_cfg = ingest.SynthConfig(
        n_trips=cfg["n"],
        bbox=_parse_bbox(cfg["bbox"]),
        gamma_shape=cfg["gamma_shape"],
        gamma_scale=cfg["gamma_scale"],
        lognorm_mu=cfg["lognorm_mu"],
        lognorm_sigma=cfg["lognorm_sigma"],
        waypoints_per_trip=cfg["waypoints"],
        seed=cfg["seed"],
    )
    trips = ingest.generate_synthetic(synth_cfg)
    with open(outdir / "trips.jsonl", "w") as fh:
        ingest.write_trips_jsonl(trips, fh)
    return {"n_trips": len(trips), "seed": cfg["seed"]}


def cmd_stats(cfg: dict, outdir: Path) -> dict:
    if not cfg.get("trips"):
        raise ValueError("--trips is required")
    trips = _load_trips(cfg["trips"])
    ctx = model.ScaleContext.from_trips(trips)
    durations = [t.duration for t in trips if t.duration > 0]
    distances = [model.path_length(t) for t in trips]
    distances = [d for d in distances if d > 0]

    fit_rows = []
    for name, samples in (("duration", durations), ("distance", distances)):
        for fitter in (stats.fit_lognormal, stats.fit_gamma):
            fit = fitter(samples)
            fit_rows.append([name, fit.family, f"{fit.params[0]:.6f}",
                             f"{fit.params[1]:.6f}", f"{fit.log_likelihood:.6f}", fit.n])
    _write_csv(outdir / "fits.csv",
               ["variable", "family", "param1", "param2", "loglik", "n"], fit_rows)

    cdf_exports = {
        "duration": durations,
        "distance": distances,
        "waypoints": [len(t.waypoints) for t in trips],
        "start_time": [t.start_time for t in trips],
        "end_time": [t.end_time for t in trips],
    }
    for name, samples in cdf_exports.items():
        steps = stats.empirical_cdf(samples)
        _write_csv(outdir / f"cdf_{name}.csv", ["value", "probability"],
                   [[f"{v:.6f}", f"{p:.6f}"] for v, p in steps])

    rows, cols = cfg["grid_rows"], cfg["grid_cols"]
    unique = stats.grid_unique_counts(trips, ctx, rows, cols)
    _write_csv(outdir / "grid_unique.csv", ["row", "col", "value"],
               [[r, c, int(unique.values[r, c])]
                for r in range(rows) for c in range(cols)])
    quart = stats.grid_duration_stats(trips, ctx, rows, cols)
    grid_rows = []
    for r in range(rows):
        for c in range(cols):
            cell = quart.values[r, c]
            if np.isnan(cell).any():
                grid_rows.append([r, c, "", "", "", "", ""])
            else:
                grid_rows.append([r, c] + [f"{v:.3f}" for v in cell])
    _write_csv(outdir / "grid_duration.csv",
               ["row", "col", "min", "q1", "median", "q3", "max"], grid_rows)

    try:
        correlation = stats.pearson(
            [len(t.waypoints) for t in trips], [model.path_length(t) for t in trips])
    except ValueError:
        correlation = None
    return {
        "n_trips": len(trips),
        "pearson_waypoints_vs_distance":
            None if correlation is None else round(correlation, 4),
    }


def _build_symmetric_affinity(cfg: dict, trips: list[model.Trip]) -> tuple[np.ndarray, float]:
    """Affinity for clustering: symmetric by construction or by decomposition."""
    ctx = model.ScaleContext.from_trips(trips)
    reps = [model.od_rep(t, ctx) for t in trips]
    weights = _weights(cfg)
    scorer_name = cfg["scorer"]
    if scorer_name == "wgm":
        aff = affinity.build_affinity(
            reps, lambda a, b: metrics.wgm_sim(a, b, weights), symmetric_scorer=True)
        return aff.values, 1.0
    pair = metrics.car_score if scorer_name == "car" else metrics.cp_score
    aff = affinity.build_affinity(reps, lambda a, b: pair(a, b, weights))
    sym, _, ratio = affinity.sym_decompose(aff.values)
    return sym, ratio


def cmd_affinity(cfg: dict, outdir: Path) -> dict:
    if not cfg.get("trips"):
        raise ValueError("--trips is required")
    trips = _load_trips(cfg["trips"])
    ctx = model.ScaleContext.from_trips(trips)
    reps = [model.od_rep(t, ctx) for t in trips]
    weights = _weights(cfg)
    scorer_name = cfg["scorer"]
    if scorer_name == "wgm":
        aff = affinity.build_affinity(
            reps, lambda a, b: metrics.wgm_sim(a, b, weights), symmetric_scorer=True)
    else:
        pair = metrics.car_score if scorer_name == "car" else metrics.cp_score
        aff = affinity.build_affinity(reps, lambda a, b: pair(a, b, weights))
    _, _, ratio = affinity.sym_decompose(aff.values)
    ids = [t.id for t in trips]
    _write_csv(outdir / "affinity.csv", ["i", "j", "score"],
               [[ids[i], ids[j], f"{aff.values[i, j]:.6f}"]
                for i in range(aff.n) for j in range(aff.n)])
    return {"n": aff.n, "scorer": scorer_name, "symmetric_ratio": round(ratio, 6)}


def cmd_cluster(cfg: dict, outdir: Path) -> dict:
    if not cfg.get("trips"):
        raise ValueError("--trips is required")
    trips = _load_trips(cfg["trips"])
    sym, ratio = _build_symmetric_affinity(cfg, trips)
    if cfg.get("kernel_gamma"):
        sym = np.exp(-cfg["kernel_gamma"] * (1.0 - sym))
    labels = affinity.spectral_cluster(sym, cfg["k"], cfg["seed"])
    ids = [t.id for t in trips]
    _write_csv(outdir / "labels.csv", ["trip_id", "cluster"],
               [[i, int(c)] for i, c in zip(ids, labels)])

    ctx = model.ScaleContext.from_trips(trips)
    features = np.array([model.od_rep(t, ctx).reshape(-1) for t in trips])
    coords_pca, explained = affinity.pca_2d(features, seed=cfg["seed"])
    _write_csv(outdir / "coords_pca.csv", ["trip_id", "x", "y"],
               [[i, f"{x:.6f}", f"{y:.6f}"] for i, (x, y) in zip(ids, coords_pca)])
    coords_mds = affinity.mds_2d(1.0 - sym)
    _write_csv(outdir / "coords_mds.csv", ["trip_id", "x", "y"],
               [[i, f"{x:.6f}", f"{y:.6f}"] for i, (x, y) in zip(ids, coords_mds)])

    variables = ("origin_x", "origin_y", "dest_x", "dest_y", "start", "end")
    header = ["cluster", "n"]
    for name in variables:
        header += [f"{name}_mean", f"{name}_median", f"{name}_std"]
    summary_rows = []
    for cluster in range(cfg["k"]):
        members = [t for t, c in zip(trips, labels) if c == cluster]
        if not members:
            summary_rows.append([cluster, 0] + [""] * (3 * len(variables)))
            continue
        cells: list[object] = [cluster, len(members)]
        for values in (
            [t.origin.x for t in members], [t.origin.y for t in members],
            [t.destination.x for t in members], [t.destination.y for t in members],
            [t.start_time for t in members], [t.end_time for t in members],
        ):
            arr = np.asarray(values)
            cells += [f"{arr.mean():.3f}", f"{np.median(arr):.3f}", f"{arr.std():.3f}"]
        summary_rows.append(cells)
    _write_csv(outdir / "cluster_summary.csv", header, summary_rows)
    return {
        "n": len(trips), "k": cfg["k"], "symmetric_ratio": round(ratio, 6),
        "pca_explained": [round(float(e), 4) for e in explained],
    }


def cmd_match(cfg: dict, outdir: Path) -> dict:
    requests, rides = _split_riders_rides(cfg)
    scenario = _scenario(cfg)
    report = matching.greedy_match(requests, rides, scenario)
    _write_matches_csv(outdir / "matches.csv", report)
    table = report.to_table_dict()
    table.update({k: round(v, 3) for k, v in matching.savings_accounting(report).items()
                  if k != "savings"})
    _write_json(outdir / "report.json", table)

    curve_rows = []
    match_counts = _parse_ints(cfg["sweep_l"]) if cfg.get("sweep_l") else [1]
    if cfg.get("sweep_dist"):
        curve_rows += matching.match_counts_curve(
            requests, rides, scenario, _parse_floats(cfg["sweep_dist"]), match_counts, "dist")
    if cfg.get("sweep_time"):
        curve_rows += matching.match_counts_curve(
            requests, rides, scenario, _parse_floats(cfg["sweep_time"]), match_counts, "time")
    if curve_rows:
        _write_csv(outdir / "curve.csv", ["vary", "threshold", "L", "count"],
                   [[r["vary"], f"{r['threshold']:.1f}", r["L"], r["count"]]
                    for r in curve_rows])
    return {
        "mode": scenario.mode, "n_requests": report.n_requests,
        "n_matched": report.n_matched, "savings_pct": round(100 * report.savings, 2),
    }


def cmd_compare(cfg: dict, outdir: Path) -> dict:
    requests, rides = _split_riders_rides(cfg)
    scenario = _scenario(cfg)
    names = [m.strip() for m in cfg["metrics"].split(",") if m.strip()]
    if not names:
        raise ValueError("--metrics must name at least one metric")
    reports = matching.compare_metrics(requests, rides, names, scenario, cfg["rep_len"])
    tables = {name: rep.to_table_dict() for name, rep in reports.items()}
    _write_json(outdir / "report.json", tables)
    field_names = list(next(iter(tables.values())).keys())
    _write_csv(outdir / "comparison.csv", ["field"] + names,
               [[field] + [tables[name][field] for name in names] for field in field_names])

    if cfg.get("wt_sweep"):
        sweep_rows = []
        for wt in _parse_floats(cfg["wt_sweep"]):
            swept = dataclasses.replace(
                scenario, weights=metrics.WgmWeights(1.0 - wt, wt), metric="wgm")
            rep = matching.greedy_match(requests, rides, swept, rep_len=cfg["rep_len"])
            sweep_rows.append([f"{wt:.3f}", f"{rep.oo_dist_km:.3f}", f"{rep.dd_dist_km:.3f}",
                               _sec(rep.oo_time_s), _sec(rep.dd_time_s)])
        _write_csv(outdir / "wt_sweep.csv",
                   ["w_time", "oo_dist_km", "dd_dist_km", "oo_time_s", "dd_time_s"],
                   sweep_rows)
    return {"metrics": names, "n_requests": len(requests),
            "n_matched": next(iter(reports.values())).n_matched}


def cmd_carshare(cfg: dict, outdir: Path) -> dict:
    if not cfg.get("trips"):
        raise ValueError("--trips is required")
    trips = _load_trips(cfg["trips"])
    dag, schedule = carshare.schedule_trips(
        trips,
        dist_threshold=cfg["dist_threshold"],
        time_threshold=cfg["time_threshold"],
        weights=_weights(cfg),
    )
    _write_csv(outdir / "chains.csv", ["chain_id", "position", "trip_id"],
               [[ci, pos, tid]
                for ci, chain in enumerate(schedule.chains)
                for pos, tid in enumerate(chain)])
    stats_rows = carshare.chain_stats(schedule, trips)
    _write_csv(outdir / "chain_stats.csv",
               ["chain_id", "length", "travel_km", "pickup_km", "pickup_s"],
               [[s.chain_id, s.length, f"{s.travel_km:.3f}", f"{s.pickup_km:.3f}",
                 _sec(s.pickup_s)] for s in stats_rows])
    lengths = sorted({s.length for s in stats_rows})
    _write_csv(outdir / "chain_length_hist.csv", ["length", "count"],
               [[ln, sum(1 for s in stats_rows if s.length == ln)] for ln in lengths])
    multi = [len(c) for c in schedule.chains if len(c) > 1]
    summary = {
        "n_trips": dag.n,
        "n_edges": len(dag.edges),
        "cardinality": schedule.cardinality,
        "n_cars": schedule.n_cars,
        "singleton_count": schedule.singleton_count,
        "mean_chain_length": round(dag.n / schedule.n_cars, 4) if schedule.n_cars else None,
        "mean_multi_chain_length":
            round(sum(multi) / len(multi), 4) if multi else None,
    }
    _write_json(outdir / "schedule_summary.json", summary)
    return summary


HANDLERS: dict[str, Callable[[dict, Path], dict]] = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "stats": cmd_stats,
    "affinity": cmd_affinity,
    "cluster": cmd_cluster,
    "match": cmd_match,
    "compare": cmd_compare,
    "carshare": cmd_carshare,
}


# ---------------------------------------------------------------------------
# argument parsing and config resolution

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sub.add_argument("--config", default=None, help="key = value defaults file")
    sub.add_argument("--from-manifest", dest="from_manifest", default=None,
                     help="re-run the configuration captured in a run_manifest.json")


def _add_scenario_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--mode", choices=["car", "carpool"], default="car")
    sub.add_argument("--dist-threshold", dest="dist_threshold", type=float, default=1800.0)
    sub.add_argument("--time-threshold", dest="time_threshold", type=float, default=900.0)
    sub.add_argument("--w-space", dest="w_space", type=float, default=0.6)
    sub.add_argument("--w-time", dest="w_time", type=float, default=0.4)


def _add_split_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--requests", default=None, help="requests trips.jsonl")
    sub.add_argument("--rides", default=None, help="rides trips.jsonl")
    sub.add_argument("--trips", default=None, help="single trip set to split")
    sub.add_argument("--n-riders", dest="n_riders", type=int, default=0)
    sub.add_argument("--n-rides", dest="n_rides", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tripmatch", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ingest", help="parse a trace file and cut a time window")
    p.add_argument("--input", default=None)
    p.add_argument("--window-start", dest="window_start", type=float, default=0.0)
    p.add_argument("--window-end", dest="window_end", type=float, default=3600.0)
    p.add_argument("--format", default="t id x y speed")
    _add_common(p)

    p = subs.add_parser("synth", help="generate a synthetic trip set")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--bbox", default="0,20000,0,20000,0,86400")
    p.add_argument("--gamma-shape", dest="gamma_shape", type=float, default=2.0)
    p.add_argument("--gamma-scale", dest="gamma_scale", type=float, default=300.0)
    p.add_argument("--lognorm-mu", dest="lognorm_mu", type=float, default=8.0)
    p.add_argument("--lognorm-sigma", dest="lognorm_sigma", type=float, default=0.6)
    p.add_argument("--waypoints", type=int, default=10)
    _add_common(p)

    p = subs.add_parser("stats", help="distribution fits, CDFs, and grid aggregates")
    p.add_argument("--trips", default=None)
    p.add_argument("--grid-rows", dest="grid_rows", type=int, default=10)
    p.add_argument("--grid-cols", dest="grid_cols", type=int, default=10)
    _add_common(p)

    p = subs.add_parser("affinity", help="pairwise similarity matrix")
    p.add_argument("--trips", default=None)
    p.add_argument("--scorer", choices=["wgm", "car", "cp"], default="wgm")
    p.add_argument("--w-space", dest="w_space", type=float, default=0.6)
    p.add_argument("--w-time", dest="w_time", type=float, default=0.4)
    _add_common(p)

    p = subs.add_parser("cluster", help="spectral clustering plus 2-D embeddings")
    p.add_argument("--trips", default=None)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--scorer", choices=["wgm", "car", "cp"], default="wgm")
    p.add_argument("--kernel-gamma", dest="kernel_gamma", type=float, default=None)
    p.add_argument("--w-space", dest="w_space", type=float, default=0.6)
    p.add_argument("--w-time", dest="w_time", type=float, default=0.4)
    _add_common(p)

    p = subs.add_parser("match", help="greedy rider-to-ride matching")
    _add_split_flags(p)
    _add_scenario_flags(p)
    p.add_argument("--metric", choices=list(matching.METRIC_NAMES), default="wgm")
    p.add_argument("--sweep-dist", dest="sweep_dist", default=None,
                   help="comma list of distance thresholds for curve.csv")
    p.add_argument("--sweep-time", dest="sweep_time", default=None,
                   help="comma list of time thresholds for curve.csv")
    p.add_argument("--sweep-L", dest="sweep_l", default=None,
                   help="comma list of least-match counts")
    _add_common(p)

    p = subs.add_parser("compare", help="one scenario under several metrics")
    _add_split_flags(p)
    _add_scenario_flags(p)
    p.add_argument("--metrics", default="wgm,lcss,frechet,dtw,dtw_time,wgm_time")
    p.add_argument("--rep-len", dest="rep_len", type=int, default=50)
    p.add_argument("--wt-sweep", dest="wt_sweep", default=None,
                   help="comma list of temporal weights for wt_sweep.csv")
    _add_common(p)

    p = subs.add_parser("carshare", help="minimum-fleet chain scheduling")
    p.add_argument("--trips", default=None)
    p.add_argument("--dist-threshold", dest="dist_threshold", type=float, default=1800.0)
    p.add_argument("--time-threshold", dest="time_threshold", type=float, default=900.0)
    p.add_argument("--w-space", dest="w_space", type=float, default=0.6)
    p.add_argument("--w-time", dest="w_time", type=float, default=0.4)
    _add_common(p)

    return parser


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {raw.strip()!r}; expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _coerce(value: object, template: object) -> object:
    if value is None or not isinstance(value, str):
        return value
    if isinstance(template, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return value


def resolve_config(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults, config file, manifest, and explicit flags (in that order)."""
    cfg = dict(defaults)
    explicit = {k: v for k, v in vars(args).items() if v != defaults.get(k)}

    if args.config:
        for key, value in _read_config_file(args.config).items():
            if key not in defaults:
                raise ValueError(f"unknown config key {key!r}")
            cfg[key] = _coerce(value, defaults[key])
    if args.from_manifest:
        with open(args.from_manifest) as fh:
            manifest = json.load(fh)
        if manifest.get("command") != args.command:
            raise ValueError(
                f"manifest is for {manifest.get('command')!r}, not {args.command!r}")
        cfg.update(manifest["config"])
    cfg.update(explicit)

    # manifests must replay from anywhere, so inputs are pinned absolute
    for key in _INPUT_KEYS:
        if cfg.get(key):
            cfg[key] = os.path.abspath(cfg[key])
    if not cfg.get("out"):
        cfg["out"] = os.environ.get(_OUTDIR_ENV, "out")
    cfg["command"] = args.command
    return cfg


_ERROR_CATEGORIES: tuple[tuple[type, str], ...] = (
    (ingest.TraceFormatError, "format"),
    (stats.DegenerateFitError, "degenerate-fit"),
    (affinity.DegenerateInputError, "degenerate-input"),
    (matching.UndefinedReportError, "undefined-report"),
    (ValueError, "invalid-argument"),
    (OSError, "io"),
)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = vars(parser.parse_args([args.command]))
    try:
        cfg = resolve_config(args, defaults)
        outdir = Path(cfg["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        summary = HANDLERS[args.command](cfg, outdir)
        _manifest(cfg, outdir)
    except tuple(cat for cat, _ in _ERROR_CATEGORIES) as exc:
        category = next(name for cls, name in _ERROR_CATEGORIES if isinstance(exc, cls))
        print(json.dumps({"status": "error", "category": category, "message": str(exc)},
                         sort_keys=True))
        return 1
    summary = {"command": args.command, "out": str(outdir), **summary, "status": "ok"}
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
