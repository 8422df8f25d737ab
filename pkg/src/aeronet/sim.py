"""Flow-level evaluation: path capacities, shared-medium airtime and bits received."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .channel import LinkBudget, McsTable, mcs_rate_for_snr
from .core import TimeGrid, Trajectory, position_at
from .errors import InvalidInputError
from .routing import ForwardingSchedule, GraphSnapshot, TrafficDemandSet, build_snapshot, validate_path

BOTTLENECK = "bottleneck"
AIRTIME = "airtime"
MAXMIN = "maxmin"
MEDIUM_MODES = (BOTTLENECK, AIRTIME, MAXMIN)

UNDEFINED_GAIN = "undefined"


@dataclass(frozen=True)
class FlowAssignment:
    t: float
    src: int
    path: tuple[int, ...] | None
    offered_bps: float
    bottleneck_bps: float
    achieved_bps: float
    airtime: float = 0.0


@dataclass
class StepResult:
    t: float
    flows: list[FlowAssignment]
    occupancy: float
    queued_bits: dict[int, float] = field(default_factory=dict)
    dropped_bits: dict[int, float] = field(default_factory=dict)

    @property
    def aggregate_bps(self) -> float:
        return sum(f.achieved_bps for f in self.flows)


@dataclass
class SimReport:
    grid: TimeGrid
    mode: str
    steps: list[StepResult] = field(default_factory=list)

    @property
    def dt(self) -> float:
        return self.grid.dt

    def flows(self) -> list[int]:
        return sorted({f.src for s in self.steps for f in s.flows})

    def series(self, src: int | None = None) -> list[float]:
        """Achieved bit/s per step, for one flow or the aggregate."""
        if src is None:
            return [s.aggregate_bps for s in self.steps]
        out = []
        for s in self.steps:
            out.append(sum(f.achieved_bps for f in s.flows if f.src == src))
        return out

    def totals(self) -> dict:
        per = {str(n): bits_received(self, n) for n in self.flows()}
        return {"per_flow_bits": per, "aggregate_bits": bits_received(self)}

    def to_csv(self, header_comment: str | None = None) -> str:
        out = io.StringIO()
        if header_comment:
            out.write(f"# {header_comment}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t", "src", "path_len", "bottleneck_bps", "achieved_bps", "occupancy"])
        for s in self.steps:
            for f in s.flows:
                w.writerow([repr(f.t), f.src, len(f.path) - 1 if f.path else 0,
                            repr(f.bottleneck_bps), repr(f.achieved_bps), repr(s.occupancy)])
        return out.getvalue()

    def summary(self, baseline: "SimReport | None" = None, **extra) -> dict:
        d = {"mode": self.mode, "t0": self.grid.t0, "dt": self.grid.dt,
             "steps": self.grid.steps, **self.totals()}
        if baseline is not None:
            d["gain_vs_baseline"] = compare_runs(self, baseline)
        d.update(extra)
        return d

    def summary_json(self, baseline: "SimReport | None" = None, **extra) -> str:
        return json.dumps(self.summary(baseline, **extra), sort_keys=True, indent=2)


def path_capacity(snapshot: GraphSnapshot, path: Sequence[int]) -> float:
    """Smallest Shannon capacity along ``path``."""
    validate_path(snapshot, path)
    return min(snapshot.link_capacity(i, j) for i, j in zip(path, path[1:]))


def _link_rates(snapshot: GraphSnapshot, path, table: McsTable | None) -> list[float]:
    rates = []
    for i, j in zip(path, path[1:]):
        if not snapshot.has_link(i, j):
            return [0.0]
        if table is None:
            rates.append(snapshot.link_capacity(i, j))
        else:
            a, b = snapshot.index(i), snapshot.index(j)
            rates.append(mcs_rate_for_snr(table, float(snapshot.snr[a, b])))
    return rates


def airtime_allocate(demands: Mapping[int, float], link_rates: Mapping[int, Sequence[float]],
                     mode: str = AIRTIME) -> tuple[dict[int, float], dict[int, float], float]:
    """Share one collision domain among flows.

    A flow carrying ``R`` bit/s over links of rates ``r_l`` keeps the channel
    busy for ``R * sum(1 / r_l)`` of the time. If the demands fit, everyone is
    served; otherwise ``airtime`` scales every demand by ``1 / total`` and
    ``maxmin`` water-fills a common rate cap.

    Returns ``(achieved, airtime, occupancy)``; flows with a zero-rate link
    are unroutable and get 0.
    """
    cost: dict[int, float] = {}
    for src, rates in link_rates.items():
        if not rates or any(r <= 0 for r in rates):
            cost[src] = math.inf
        else:
            cost[src] = sum(1.0 / r for r in rates)
    routed = {s: demands.get(s, 0.0) for s in link_rates if math.isfinite(cost[s])}
    need = sum(routed[s] * cost[s] for s in routed)
    if need <= 1.0:
        achieved = dict(routed)
    elif mode == AIRTIME:
        achieved = {s: routed[s] / need for s in routed}
    elif mode == MAXMIN:
        achieved = _water_fill(routed, cost)
    else:
        raise InvalidInputError(f"unknown medium mode {mode!r}")
    for s in link_rates:
        achieved.setdefault(s, 0.0)
    air = {s: achieved[s] * cost[s] if math.isfinite(cost[s]) else 0.0 for s in link_rates}
    return achieved, air, sum(air.values())


def _water_fill(demands: Mapping[int, float], cost: Mapping[int, float]) -> dict[int, float]:
    # rates min(T_i, cap) with sum(cost_i * rate_i) = 1
    order = sorted(demands, key=lambda s: (demands[s], s))
    budget = 1.0
    remaining_cost = sum(cost[s] for s in order)
    out = {}
    for k, s in enumerate(order):
        cap = budget / remaining_cost
        if demands[s] <= cap:
            out[s] = demands[s]
            budget -= demands[s] * cost[s]
            remaining_cost -= cost[s]
        else:
            for s2 in order[k:]:
                out[s2] = cap
            break
    return out


def bits_received(report: SimReport, flow: int | None = None) -> float:
    return sum(r * report.dt for r in report.series(flow))


def compare_runs(a: SimReport, b: SimReport) -> dict:
    """Relative gain of ``a`` over baseline ``b`` in bits received."""
    if a.grid != b.grid:
        raise InvalidInputError("reports cover different time grids")

    def gain(x: float, y: float):
        return UNDEFINED_GAIN if y == 0 else (x - y) / y

    flows = sorted(set(a.flows()) | set(b.flows()))
    return {
        "aggregate": gain(bits_received(a), bits_received(b)),
        "per_flow": {str(n): gain(bits_received(a, n), bits_received(b, n)) for n in flows},
    }


def run_simulation(trajectories: Sequence[Trajectory], grid: TimeGrid, budget: LinkBudget,
                   schedule: ForwardingSchedule, demands: TrafficDemandSet,
                   medium_mode: str = BOTTLENECK, static: bool = False,
                   mcs_table: McsTable | None = None,
                   queue_limit_bits: float | None = None,
                   cs_threshold_db: float | None = None) -> SimReport:
    """Evaluate a forwarding schedule step by step.

    ``static=True`` freezes every flow on its first-instant path; steps where
    that path has lost a link score zero. ``bottleneck`` mode serves each flow
    up to its path's Shannon bottleneck independently (occupancy is reported
    as NaN); ``airtime``/``maxmin`` share a single medium using MCS rates when
    ``mcs_table`` is given, Shannon capacities otherwise.

    ``queue_limit_bits`` enables a per-source FIFO backlog; unserved bits wait
    up to that limit and the rest are dropped.
    """
    if medium_mode not in MEDIUM_MODES:
        raise InvalidInputError(f"unknown medium mode {medium_mode!r}")
    frozen: dict[int, tuple[int, ...] | None] = {}
    for src in schedule.sources:
        es = schedule.entries[src]
        frozen[src] = es[0].path if es else None
    report = SimReport(grid, medium_mode)
    backlog: dict[int, float] = {}
    dt = grid.dt
    for t in grid.instants():
        snap = build_snapshot({tr.node.id: position_at(tr, t) for tr in trajectories},
                              budget, t, cs_threshold_db)
        offered: dict[int, float] = {}
        paths: dict[int, tuple[int, ...] | None] = {}
        for src in demands.nodes:
            if src == schedule.gw:
                continue
            off = demands.offered(src, t)
            if queue_limit_bits is not None:
                off += backlog.get(src, 0.0) / dt
            if off <= 0:
                continue
            offered[src] = off
            paths[src] = frozen.get(src) if static else schedule.path_at(src, t)
        rates: dict[int, list[float]] = {}
        bott: dict[int, float] = {}
        for src, path in paths.items():
            if path is None:
                rates[src] = [0.0]
                bott[src] = 0.0
                continue
            alive = all(snap.has_link(i, j) for i, j in zip(path, path[1:]))
            if not alive:
                rates[src] = [0.0]
                bott[src] = 0.0
                continue
            if medium_mode == BOTTLENECK:
                bott[src] = path_capacity(snap, path)
            else:
                rates[src] = _link_rates(snap, path, mcs_table)
                bott[src] = min(rates[src])
        if medium_mode == BOTTLENECK:
            achieved = {s: min(offered[s], bott[s]) for s in paths}
            air = {s: 0.0 for s in paths}
            occ = math.nan
        else:
            achieved, air, occ = airtime_allocate(offered, rates, medium_mode)
        flows = [FlowAssignment(t, s, paths[s], offered[s], bott[s], achieved[s], air[s])
                 for s in sorted(paths)]
        step = StepResult(t, flows, occ)
        if queue_limit_bits is not None:
            for s in demands.nodes:
                if s == schedule.gw:
                    continue
                arrivals = demands.offered(s, t) * dt
                held = backlog.get(s, 0.0) + arrivals
                served = achieved.get(s, 0.0) * dt
                left = max(0.0, held - served)
                dropped = max(0.0, left - queue_limit_bits)
                backlog[s] = left - dropped
                step.queued_bits[s] = backlog[s]
                step.dropped_bits[s] = dropped
        report.steps.append(step)
    return report


def read_report_csv(text: str) -> list[dict]:
    """Parse a report CSV (comment lines skipped) into typed rows."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        rows.append({
            "t": float(rec["t"]), "src": int(rec["src"]), "path_len": int(rec["path_len"]),
            "bottleneck_bps": float(rec["bottleneck_bps"]),
            "achieved_bps": float(rec["achieved_bps"]), "occupancy": float(rec["occupancy"]),
        })
    return rows
