"""Predictive centralized routing over time-varying UAV graphs.

Each time step gets a :class:`GraphSnapshot` built from the predicted node
positions; paths towards the gateway are computed with Dijkstra under one of
three rules:

* ``euclidean`` - sum of link lengths,
* ``i2r`` - blend of normalized link length and normalized count of active
  carrier-sense neighbours of every node entered,
* ``capacity`` - widest path (maximum bottleneck Shannon capacity), fewest
  hops among the widest.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .channel import LinkBudget, shannon_from_snr_db
from .core import TimeGrid, Trajectory, Vec3, position_at
from .errors import InvalidInputError, InvalidPathError, InvalidScenarioError, ParseError, SchemaError
from .parallel import ordered_map

EUCLIDEAN = "euclidean"
I2R = "i2r"
CAPACITY = "capacity"
VARIANTS = (EUCLIDEAN, I2R, CAPACITY)


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    distance: float
    snr_db: float
    capacity_bps: float


@dataclass(frozen=True, eq=False)
class GraphSnapshot:
    """Directed link set at one instant.

    Matrices are indexed by position in ``ids`` (sorted ascending), so index
    order and node-id order agree for lexicographic tie-breaking.
    """

    t: float
    ids: tuple[int, ...]
    positions: tuple[Vec3, ...]
    dist: np.ndarray
    snr: np.ndarray
    capacity: np.ndarray
    usable: np.ndarray
    carrier_sense: np.ndarray

    def index(self, node: int) -> int:
        k = bisect.bisect_left(self.ids, node)
        if k == len(self.ids) or self.ids[k] != node:
            raise InvalidInputError(f"node {node} not in snapshot at t={self.t}")
        return k

    def __contains__(self, node: int) -> bool:
        k = bisect.bisect_left(self.ids, node)
        return k < len(self.ids) and self.ids[k] == node

    @property
    def links(self) -> list[Link]:
        out = []
        for a, b in zip(*np.nonzero(self.usable)):
            out.append(Link(self.ids[a], self.ids[b], float(self.dist[a, b]),
                            float(self.snr[a, b]), float(self.capacity[a, b])))
        return out

    def has_link(self, i: int, j: int) -> bool:
        return bool(self.usable[self.index(i), self.index(j)])

    def link_capacity(self, i: int, j: int) -> float:
        a, b = self.index(i), self.index(j)
        return float(self.capacity[a, b]) if self.usable[a, b] else 0.0

    def max_link_distance(self) -> float:
        return float(self.dist[self.usable].max()) if self.usable.any() else 0.0


def build_snapshot(positions: Mapping[int, Vec3], budget: LinkBudget, t: float = 0.0,
                   cs_threshold_db: float | None = None) -> GraphSnapshot:
    """Gate every ordered pair on ``snr > threshold`` and annotate the links.

    ``cs_threshold_db`` sets the carrier-sense range used for neighbour
    counting; it defaults to the link threshold.
    """
    if len(positions) < 2:
        raise InvalidScenarioError("a snapshot needs at least two nodes")
    ids = tuple(sorted(positions))
    pos = tuple(positions[i] for i in ids)
    P = np.array([p.as_array() for p in pos])
    diff = P[:, None, :] - P[None, :, :]
    D = np.sqrt((diff * diff).sum(axis=-1))
    n = len(ids)
    off = ~np.eye(n, dtype=bool)
    if np.any(D[off] == 0):
        a, b = np.argwhere((D == 0) & off)[0]
        raise InvalidScenarioError(f"nodes {ids[a]} and {ids[b]} coincide at t={t}")
    with np.errstate(divide="ignore"):
        snr = budget.budget_constant_db + budget.tx_power_dbm - 20.0 * np.log10(D)
    np.fill_diagonal(snr, -np.inf)
    usable = snr > budget.snr_threshold_db
    cap = np.where(usable, shannon_from_snr_db(budget.bandwidth_hz, np.where(usable, snr, 0.0)), 0.0)
    cs_thr = budget.snr_threshold_db if cs_threshold_db is None else cs_threshold_db
    cs = snr > cs_thr
    for arr in (D, snr, cap, usable, cs):
        arr.setflags(write=False)
    return GraphSnapshot(float(t), ids, pos, D, snr, cap, usable, cs)


@dataclass(frozen=True)
class RoutingMetric:
    variant: str = EUCLIDEAN
    alpha: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown routing metric {self.variant!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError("alpha must lie in [0, 1]")


def gamma_neighbors(snapshot: GraphSnapshot, active_set: Iterable[int], j: int,
                    exclude: int | None = None) -> int:
    """Active nodes within carrier-sense range of ``j``, not counting ``j`` or ``exclude``."""
    kj = snapshot.index(j)
    count = 0
    for a in set(active_set):
        if a == j or a == exclude or a not in snapshot:
            continue
        if snapshot.carrier_sense[snapshot.index(a), kj]:
            count += 1
    return count


def _active_mask(snapshot: GraphSnapshot, active_set: Iterable[int]) -> np.ndarray:
    mask = np.zeros(len(snapshot.ids), dtype=bool)
    for a in set(active_set):
        if a in snapshot:
            mask[snapshot.index(a)] = True
    return mask


def gamma_matrix(snapshot: GraphSnapshot, active_set: Iterable[int]) -> tuple[np.ndarray, int]:
    """``G[i, j]`` = gamma of ``j`` excluding ``i``, plus the per-step maximum.

    The maximum is taken over every node's full active-neighbour count.
    """
    act = _active_mask(snapshot, active_set)
    cs = snapshot.carrier_sense
    # cs is symmetric (free space, common power); count active a != j in range of j
    full = (cs & act[:, None]).sum(axis=0).astype(float)  # per j
    G = np.repeat(full[None, :], len(act), axis=0)
    G -= (cs & act[:, None]).astype(float)  # drop i when i is active and in range of j
    gmax = int(full.max()) if len(full) else 0
    return G, gmax


def edge_weights(metric: RoutingMetric, snapshot: GraphSnapshot,
                 active_set: Iterable[int] = ()) -> np.ndarray:
    """Dense additive edge costs; ``inf`` marks missing links."""
    usable = snapshot.usable
    if metric.variant == EUCLIDEAN:
        return np.where(usable, snapshot.dist, np.inf)
    if metric.variant != I2R:
        raise InvalidInputError(f"{metric.variant} is not an additive metric")
    dmax = snapshot.max_link_distance()
    dn = snapshot.dist / dmax if dmax > 0 else np.zeros_like(snapshot.dist)
    G, gmax = gamma_matrix(snapshot, active_set)
    gn = G / gmax if gmax > 0 else np.zeros_like(G)
    w = (1.0 - metric.alpha) * dn + metric.alpha * gn
    return np.where(usable, w, np.inf)


def validate_path(snapshot: GraphSnapshot, path: Sequence[int]) -> None:
    if len(path) < 2:
        raise InvalidPathError(f"path {list(path)} has no links")
    if len(set(path)) != len(path):
        raise InvalidPathError(f"path {list(path)} revisits a node")
    for i, j in zip(path, path[1:]):
        if i not in snapshot or j not in snapshot or not snapshot.has_link(i, j):
            raise InvalidPathError(f"link {i}->{j} unusable at t={snapshot.t}")


def path_cost(metric: RoutingMetric, snapshot: GraphSnapshot, path: Sequence[int],
              active_set: Iterable[int] = ()) -> float:
    """Cost of ``path`` under ``metric``, summed from the source forward.

    For the capacity rule the cost is the negated bottleneck capacity so
    that lower is better for every variant.
    """
    validate_path(snapshot, path)
    idx = [snapshot.index(n) for n in path]
    if metric.variant == CAPACITY:
        return -min(float(snapshot.capacity[a, b]) for a, b in zip(idx, idx[1:]))
    w = edge_weights(metric, snapshot, active_set)
    cost = 0.0
    for a, b in zip(idx, idx[1:]):
        cost += float(w[a, b])
    return cost


@dataclass(frozen=True)
class Route:
    path: tuple[int, ...]
    cost: float


def _widest(snapshot: GraphSnapshot, s: int, g: int) -> Route | None:
    cap = np.where(snapshot.usable, snapshot.capacity, 0.0)
    n = cap.shape[0]
    # max-bottleneck label-setting pass
    best = np.zeros(n)
    best[s] = np.inf
    done = np.zeros(n, dtype=bool)
    while True:
        cand = np.where(~done & (best > 0), best, -1.0)
        u = int(np.argmax(cand))
        if cand[u] <= 0:
            break
        done[u] = True
        if u == g:
            break
        np.maximum(best, np.where(~done, np.minimum(best[u], cap[u]), 0.0), out=best)
    if best[g] <= 0:
        return None
    bottleneck = float(best[g])
    hop = np.where(cap >= bottleneck, 1.0, np.inf)
    _, path = kernels.dijkstra_dense(hop, s, g)
    return Route(tuple(snapshot.ids[k] for k in path), -bottleneck)


def shortest_path(metric: RoutingMetric, snapshot: GraphSnapshot, source: int, gw: int,
                  active_set: Iterable[int] = ()) -> Route | None:
    """Minimum-cost route from ``source`` to ``gw``, or ``None`` when unreachable.

    Ties go to the lexicographically smallest node-id sequence.
    """
    s, g = snapshot.index(source), snapshot.index(gw)
    if s == g:
        raise InvalidInputError("source and gateway must differ")
    if metric.variant == CAPACITY:
        route = _widest(snapshot, s, g)
    else:
        cost, path = kernels.dijkstra_dense(edge_weights(metric, snapshot, active_set), s, g)
        route = None if path is None else Route(tuple(snapshot.ids[k] for k in path), float(cost))
    if route is not None:
        validate_path(snapshot, route.path)
    return route


class TrafficDemandSet:
    """Per-node offered bitrate as a right-continuous step function of time."""

    def __init__(self, series: Mapping[int, Sequence[tuple[float, float]]] | None = None):
        self._series: dict[int, tuple[tuple[float, float], ...]] = {}
        for node, pts in (series or {}).items():
            pts = tuple(sorted((float(t), float(v)) for t, v in pts))
            for t, v in pts:
                if v < 0 or not math.isfinite(v):
                    raise InvalidInputError(f"offered bitrate for node {node} must be finite and >= 0")
            self._series[int(node)] = pts

    @classmethod
    def constant(cls, rates: Mapping[int, float], t0: float = 0.0) -> "TrafficDemandSet":
        return cls({n: [(t0, r)] for n, r in rates.items()})

    @property
    def nodes(self) -> list[int]:
        return sorted(self._series)

    def series(self, node: int) -> tuple[tuple[float, float], ...]:
        return self._series.get(node, ())

    def offered(self, node: int, t: float) -> float:
        pts = self._series.get(node)
        if not pts:
            return 0.0
        k = bisect.bisect_right([p[0] for p in pts], t + 1e-9)
        return pts[k - 1][1] if k else 0.0

    def at(self, t: float) -> dict[int, float]:
        return {n: self.offered(n, t) for n in self.nodes}

    def __eq__(self, other):
        return isinstance(other, TrafficDemandSet) and self._series == other._series

    def __repr__(self):
        return f"TrafficDemandSet({self._series!r})"


@dataclass(frozen=True)
class ScheduleEntry:
    t: float
    src: int
    path: tuple[int, ...] | None
    cost: float | None
    changed: bool


@dataclass
class ForwardingSchedule:
    """Per-source paths over the time grid plus the instants they change."""

    grid: TimeGrid
    gw: int
    metric: RoutingMetric
    entries: dict[int, list[ScheduleEntry]] = field(default_factory=dict)

    @property
    def sources(self) -> list[int]:
        return sorted(self.entries)

    def update_instants(self, src: int | None = None) -> list[float]:
        if src is not None:
            return [e.t for e in self.entries.get(src, []) if e.changed]
        return sorted({e.t for es in self.entries.values() for e in es if e.changed})

    def path_at(self, src: int, t: float) -> tuple[int, ...] | None:
        for e in self.entries.get(src, []):
            if abs(e.t - t) < 1e-9:
                return e.path
        return None

    def records(self) -> list[dict]:
        rows = [e for es in self.entries.values() for e in es]
        rows.sort(key=lambda e: (e.t, e.src))
        return [
            {"t": e.t, "src": e.src, "path": list(e.path) if e.path else None,
             "cost": e.cost, "changed": e.changed}
            for e in rows
        ]

    def to_ndjson(self, header: Mapping | None = None) -> str:
        head = {"format": "aeronet-schedule", "version": 1, "gw": self.gw,
                "metric": self.metric.variant, "alpha": self.metric.alpha,
                "t0": self.grid.t0, "dt": self.grid.dt, "steps": self.grid.steps}
        head.update(header or {})
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in self.records()]
        return "\n".join(lines) + "\n"


def route_step(snapshot: GraphSnapshot, sources: Sequence[int], gw: int,
               metric: RoutingMetric) -> dict[int, Route | None]:
    """Paths for every source at one instant.

    I2R resolves the active set in two passes: distance-only routes first,
    then I2R with those routes' sources and relays as the active set.
    """
    if metric.variant != I2R:
        return {s: shortest_path(metric, snapshot, s, gw) for s in sources}
    first = {s: shortest_path(RoutingMetric(I2R, 0.0), snapshot, s, gw) for s in sources}
    active = set(sources)
    for r in first.values():
        if r is not None:
            active.update(r.path[:-1])
    active.discard(gw)
    return {s: shortest_path(metric, snapshot, s, gw, active) for s in sources}


def compute_schedule(trajectories: Sequence[Trajectory], grid: TimeGrid, budget: LinkBudget,
                     metric: RoutingMetric, demands: TrafficDemandSet, gw: int,
                     cs_threshold_db: float | None = None) -> ForwardingSchedule:
    ids = {tr.node.id for tr in trajectories}
    if gw not in ids:
        raise InvalidInputError(f"gateway {gw} has no trajectory")
    missing = [n for n in demands.nodes if n not in ids]
    if missing:
        raise InvalidInputError(f"demand sources without trajectories: {missing}")

    def step(t: float):
        snap = build_snapshot({tr.node.id: position_at(tr, t) for tr in trajectories},
                              budget, t, cs_threshold_db)
        sources = [n for n in demands.nodes if n != gw and demands.offered(n, t) > 0]
        return route_step(snap, sources, gw, metric)

    times = grid.instants()
    per_step = ordered_map(step, times)
    sched = ForwardingSchedule(grid, gw, metric)
    last: dict[int, tuple[int, ...] | None] = {}
    seen: set[int] = set()
    for t, routes in zip(times, per_step):
        for src in sorted(routes):
            r = routes[src]
            path = r.path if r else None
            changed = src not in seen or last.get(src) != path
            seen.add(src)
            sched.entries.setdefault(src, []).append(
                ScheduleEntry(t, src, path, r.cost if r else None, changed))
            last[src] = path
        for src in list(seen):
            if src not in routes:  # inactive this step
                seen.discard(src)
    return sched


def schedule_from_ndjson(text: str, path=None) -> ForwardingSchedule:
    """Inverse of :meth:`ForwardingSchedule.to_ndjson`."""
    sched = None
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno, path) from None
        if sched is None:
            miss = [k for k in ("format", "gw", "metric", "alpha", "t0", "dt", "steps") if k not in rec]
            if miss or rec.get("format") != "aeronet-schedule":
                raise SchemaError("not a schedule header" + (f" (missing {', '.join(miss)})" if miss else ""),
                                  lineno, path)
            sched = ForwardingSchedule(TimeGrid(rec["t0"], rec["dt"], rec["steps"]), int(rec["gw"]),
                                       RoutingMetric(rec["metric"], rec["alpha"]))
            continue
        miss = [k for k in ("t", "src", "path", "cost", "changed") if k not in rec]
        if miss:
            raise SchemaError(f"missing field(s) {', '.join(miss)}", lineno, path)
        p = tuple(int(n) for n in rec["path"]) if rec["path"] is not None else None
        sched.entries.setdefault(int(rec["src"]), []).append(
            ScheduleEntry(float(rec["t"]), int(rec["src"]), p, rec["cost"], bool(rec["changed"])))
    if sched is None:
        raise SchemaError("empty schedule file", 1, path)
    return sched
