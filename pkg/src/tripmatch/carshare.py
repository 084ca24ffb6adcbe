"""Free-float car-sharing: schedule a minimum fleet over a set of trips.

A car can service trip b after trip a when b starts after a ends and the
hand-off (a's destination to b's origin) is within distance and time
thresholds. Those hand-offs form a DAG over the trips; a minimum path
partition of the DAG is a schedule with the fewest cars, and among the
minimum partitions we pick one maximizing the total hand-off similarity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import metrics
from .metrics import WgmWeights
from .model import ScaleContext, Trip, od_rep, path_length, scale_point, spatial_distance


@dataclass(frozen=True, slots=True)
class TripDag:
    """Hand-off graph: node i is trips[i], edge (i, j) means j can follow i."""

    trip_ids: tuple[str, ...]
    edges: dict[tuple[int, int], float]

    @property
    def n(self) -> int:
        return len(self.trip_ids)


@dataclass(frozen=True, slots=True)
class BipartiteGraph:
    """Split graph: left node i = trip i as a predecessor, right j = as a successor."""

    n: int
    edges: dict[tuple[int, int], float]


@dataclass(frozen=True, slots=True)
class ChainSchedule:
    """A partition of all trips into car chains."""

    chains: tuple[tuple[str, ...], ...]
    n_cars: int
    cardinality: int
    singleton_count: int


@dataclass(frozen=True, slots=True)
class ChainStat:
    chain_id: int
    length: int
    travel_km: float
    pickup_km: float
    pickup_s: float


def build_trip_dag(
    trips: Sequence[Trip],
    ctx: ScaleContext | None = None,
    dist_threshold: float = 1800.0,
    time_threshold: float = 900.0,
    weights: WgmWeights = metrics.DEFAULT_WEIGHTS,
    whole_trip_weight: bool = False,
) -> TripDag:
    """Build the hand-off DAG over a trip set.

    Edge (a, b) exists when b starts strictly after a ends, the gap is at
    most time_threshold seconds, and b's origin lies within dist_threshold
    meters of a's destination. The edge weight is the point similarity of
    the hand-off pair (or the whole-trip OD similarity when
    whole_trip_weight is set), always with absolute time differences.
    """
    if dist_threshold <= 0 or time_threshold <= 0:
        raise ValueError("thresholds must be positive")
    if ctx is None:
        ctx = ScaleContext.from_trips(trips)
    ends = [scale_point(t.destination, ctx) for t in trips]
    starts = [scale_point(t.origin, ctx) for t in trips]
    od_reps = [od_rep(t, ctx) for t in trips] if whole_trip_weight else None
    edges: dict[tuple[int, int], float] = {}
    for i, a in enumerate(trips):
        for j, b in enumerate(trips):
            if i == j:
                continue
            gap = b.start_time - a.end_time
            if gap <= 0 or gap > time_threshold:
                continue
            if spatial_distance(a.destination, b.origin) > dist_threshold:
                continue
            if whole_trip_weight:
                weight = metrics.wgm_sim(od_reps[i], od_reps[j], weights)
            else:
                e, s = ends[i], starts[j]
                weight = metrics.psim((e.x, e.y, e.t), (s.x, s.y, s.t), weights)
            edges[(i, j)] = weight
    dag = TripDag(tuple(t.id for t in trips), edges)
    _assert_acyclic(dag)
    return dag


def _assert_acyclic(dag: TripDag) -> None:
    """Kahn topological sort; edges built on strict time order cannot cycle."""
    indeg = [0] * dag.n
    succ: dict[int, list[int]] = {}
    for (i, j) in dag.edges:
        indeg[j] += 1
        succ.setdefault(i, []).append(j)
    queue = [v for v in range(dag.n) if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for u in succ.get(v, ()):
            indeg[u] -= 1
            if indeg[u] == 0:
                queue.append(u)
    if seen != dag.n:
        raise ValueError("trip graph contains a cycle")


def dag_to_bipartite(dag: TripDag) -> BipartiteGraph:
    """Split every node into a predecessor (left) and successor (right) copy."""
    return BipartiteGraph(dag.n, dict(dag.edges))


def max_card_max_weight_matching(graph: BipartiteGraph) -> dict[int, int]:
    """Maximum-cardinality matching of maximum total weight.

    Adds n * max(weight) to every edge before solving the assignment
    problem: any matching with one more edge then always outweighs any
    smaller matching, so the solver returns the largest matching and,
    among those, one of maximum original weight. Weights must be in
    [0, max]; absent pairs never enter the matching.

    Returns {left index: right index}.
    """
    if not graph.edges:
        return {}
    if min(graph.edges.values()) < 0:
        raise ValueError("edge weights must be nonnegative")
    top = max(graph.edges.values())
    shift = graph.n * top if top > 0 else 1.0
    costs = np.zeros((graph.n, graph.n))
    for (i, j), w in graph.edges.items():
        costs[i, j] = w + shift
    rows, cols = linear_sum_assignment(costs, maximize=True)
    return {int(i): int(j) for i, j in zip(rows, cols) if (int(i), int(j)) in graph.edges}


def extract_chains(dag: TripDag, matching: Mapping[int, int]) -> ChainSchedule:
    """Turn a bipartite matching back into car chains.

    A trip whose successor-side copy is unmatched starts a chain; following
    each trip's matched successor walks the whole chain. The chains
    partition the trips and their count is n - |matching|: the fleet size.
    """
    succs = list(matching.values())
    if len(set(succs)) != len(succs):
        raise ValueError("matching assigns one successor to several trips")
    for i, j in matching.items():
        if (i, j) not in dag.edges:
            raise ValueError(f"matched pair ({i}, {j}) is not a graph edge")
    has_predecessor = set(succs)
    chains = []
    for start in range(dag.n):
        if start in has_predecessor:
            continue
        chain = [start]
        while chain[-1] in matching:
            chain.append(matching[chain[-1]])
        chains.append(tuple(dag.trip_ids[v] for v in chain))
    schedule = ChainSchedule(
        chains=tuple(chains),
        n_cars=len(chains),
        cardinality=len(matching),
        singleton_count=sum(1 for c in chains if len(c) == 1),
    )
    assert schedule.n_cars == dag.n - schedule.cardinality
    return schedule


def chain_stats(schedule: ChainSchedule, trips: Sequence[Trip]) -> list[ChainStat]:
    """Per-chain travel, hand-off distance, and hand-off wait totals."""
    by_id = {t.id: t for t in trips}
    out = []
    for idx, chain in enumerate(schedule.chains):
        members = [by_id[tid] for tid in chain]
        travel = sum(path_length(t) for t in members)
        pickup_m = 0.0
        pickup_s = 0.0
        for prev, nxt in zip(members, members[1:]):
            pickup_m += spatial_distance(prev.destination, nxt.origin)
            pickup_s += nxt.start_time - prev.end_time
        out.append(ChainStat(
            chain_id=idx,
            length=len(members),
            travel_km=travel / 1000.0,
            pickup_km=pickup_m / 1000.0,
            pickup_s=pickup_s,
        ))
    return out


def schedule_trips(
    trips: Sequence[Trip],
    ctx: ScaleContext | None = None,
    dist_threshold: float = 1800.0,
    time_threshold: float = 900.0,
    weights: WgmWeights = metrics.DEFAULT_WEIGHTS,
) -> tuple[TripDag, ChainSchedule]:
    """End-to-end pipeline: DAG, optimal matching, chains."""
    dag = build_trip_dag(trips, ctx, dist_threshold, time_threshold, weights)
    matching = max_card_max_weight_matching(dag_to_bipartite(dag))
    return dag, extract_chains(dag, matching)
