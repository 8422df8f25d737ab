"""Scenario generation and file I/O.

Random-waypoint traces use numpy's PCG64 generator seeded per node with
``SeedSequence([seed, node_id])``, so a (seed, node) pair always yields the
same trace regardless of how many nodes are generated.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .channel import LinkBudget
from .core import NodeId, NodeKind, TimeGrid, Trajectory, Vec3, position_at
from .errors import InvalidInputError, ParseError, SchemaError
from .netplan import ZoneGrid
from .routing import TrafficDemandSet

FORMAT_VERSION = 1
PRNG = "PCG64"
SEEDING = "SeedSequence([seed, node_id])"
FORMATS = ("aeronet-scenario", "aeronet-trajectory", "aeronet-demand")


@dataclass(frozen=True)
class RwmConfig:
    box: tuple[float, float, float] = (80.0, 80.0, 25.0)
    n_nodes: int = 21
    v_min: float = 0.5
    v_max: float = 3.0
    pause: float = 0.0
    duration: float = 160.0
    seed: int = 0
    gw_id: int | None = 0
    pin_gw: bool = False

    def __post_init__(self):
        if not 0 < self.v_min <= self.v_max:
            raise InvalidInputError("need 0 < v_min <= v_max")
        if not self.duration > 0:
            raise InvalidInputError("duration must be > 0")
        if self.n_nodes < 1:
            raise InvalidInputError("n_nodes must be >= 1")
        if self.pause < 0:
            raise InvalidInputError("pause must be >= 0")
        if len(self.box) != 3 or not all(v > 0 for v in self.box):
            raise InvalidInputError(f"bad box {self.box}")

    def to_dict(self) -> dict:
        return {"box": list(self.box), "n_nodes": self.n_nodes, "v_min": self.v_min,
                "v_max": self.v_max, "pause": self.pause, "duration": self.duration,
                "seed": self.seed, "gw_id": self.gw_id, "pin_gw": self.pin_gw}


def node_rng(seed: int, node_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, node_id])))


def _rwm_node(cfg: RwmConfig, node: NodeId) -> Trajectory:
    rng = node_rng(cfg.seed, node.id)
    hi = np.asarray(cfg.box, dtype=float)
    p = rng.uniform(0.0, hi)
    t = 0.0
    wps = [(0.0, Vec3.of(p))]
    if cfg.pin_gw and node.id == cfg.gw_id:
        return Trajectory(node, tuple(wps))
    while t < cfg.duration:
        dest = rng.uniform(0.0, hi)
        speed = rng.uniform(cfg.v_min, cfg.v_max)
        d = float(np.linalg.norm(dest - p))
        if d == 0.0:
            continue
        t_arr = t + d / speed
        if t_arr >= cfg.duration:
            f = (cfg.duration - t) / (t_arr - t)
            wps.append((cfg.duration, Vec3.of(p + f * (dest - p))))
            break
        wps.append((t_arr, Vec3.of(dest)))
        p, t = dest, t_arr
        if cfg.pause > 0:
            t_p = min(t + cfg.pause, cfg.duration)
            wps.append((t_p, Vec3.of(p)))
            t = t_p
    return Trajectory(node, tuple(wps))


def generate_rwm(cfg: RwmConfig) -> list[Trajectory]:
    """Random-waypoint traces for ``cfg.n_nodes`` nodes (ids ``0..n-1``)."""
    out = []
    for i in range(cfg.n_nodes):
        kind = NodeKind.GW if cfg.gw_id is not None and i == cfg.gw_id else NodeKind.FMAP
        out.append(_rwm_node(cfg, NodeId(i, kind)))
    return out


def sample_trajectory(traj: Trajectory, grid: TimeGrid) -> Trajectory:
    pts = []
    for t in grid.instants():
        pts.append((t, position_at(traj, t)))
    return Trajectory(traj.node, tuple(pts))


def segment_speeds(traj: Trajectory) -> list[float]:
    """Speed on every waypoint segment, pauses included (as 0)."""
    out = []
    for (ta, pa), (tb, pb) in zip(traj.waypoints, traj.waypoints[1:]):
        d = math.dist(tuple(pa), tuple(pb))
        out.append(d / (tb - ta))
    return out


@dataclass(frozen=True)
class Region:
    x0: float
    y0: float
    x1: float
    y1: float
    z0: float = 0.0
    z1: float = 0.0

    def contains(self, p: Vec3) -> bool:
        return (self.x0 <= p.x <= self.x1 and self.y0 <= p.y <= self.y1
                and self.z0 <= p.z <= max(self.z0, self.z1))


@dataclass(frozen=True)
class DemandLayout:
    """Axis-aligned demand zones, each with a per-FMAP offered bitrate."""

    zones: tuple[tuple[Region, float], ...]

    def __post_init__(self):
        for _, v in self.zones:
            if v < 0:
                raise InvalidInputError("offered_bps must be >= 0")

    def offered_at(self, p: Vec3) -> float:
        for region, v in self.zones:
            if region.contains(p):
                return v
        return 0.0

    def place(self, counts: Sequence[int], seed: int, first_id: int = 1) -> list[Trajectory]:
        """Static FMAPs drawn uniformly inside each zone."""
        if len(counts) != len(self.zones):
            raise InvalidInputError("one count per zone")
        out = []
        nid = first_id
        for (region, _), n in zip(self.zones, counts):
            for _ in range(n):
                rng = node_rng(seed, nid)
                lo = np.array([region.x0, region.y0, region.z0])
                hi = np.array([region.x1, region.y1, max(region.z0, region.z1)])
                out.append(Trajectory.static(NodeId(nid), Vec3.of(rng.uniform(lo, hi))))
                nid += 1
        return out

    def demands(self, trajectories: Iterable[Trajectory], t: float = 0.0) -> TrafficDemandSet:
        return TrafficDemandSet.constant(
            {tr.node.id: self.offered_at(position_at(tr, t)) for tr in trajectories}, t0=t)


def zone_demand_from_ues(ue_positions: Sequence[Vec3], ue_offered: Sequence[float],
                         grid: ZoneGrid) -> ZoneGrid:
    """Aggregate UE offered traffic into zone demand."""
    if len(ue_positions) != len(ue_offered):
        raise InvalidInputError("one offered rate per UE")
    x0, y0, x1, y1 = grid.bounds()
    bad = [k for k, p in enumerate(ue_positions) if not (x0 <= p.x <= x1 and y0 <= p.y <= y1)]
    if bad:
        raise InvalidInputError(f"UEs outside the map: {bad}")
    dem = np.zeros(grid.shape)
    for p, v in zip(ue_positions, ue_offered):
        if v < 0:
            raise InvalidInputError("UE offered rate must be >= 0")
        dem[grid.zone_of(p.x, p.y)] += v
    return grid.with_demand(dem)


@dataclass
class ScenarioFile:
    grid: TimeGrid
    trajectories: list[Trajectory] = field(default_factory=list)
    demands: TrafficDemandSet = field(default_factory=TrafficDemandSet)
    budget: LinkBudget = field(default_factory=LinkBudget)
    metadata: dict = field(default_factory=dict)
    format: str = "aeronet-scenario"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InvalidInputError(f"unknown scenario format {self.format!r}")

    def node(self, node_id: int) -> Trajectory:
        for tr in self.trajectories:
            if tr.node.id == node_id:
                return tr
        raise InvalidInputError(f"no trajectory for node {node_id}")

    @property
    def gw_id(self) -> int | None:
        for tr in self.trajectories:
            if tr.node.kind == NodeKind.GW:
                return tr.node.id
        return None


def dumps_scenario(sf: ScenarioFile) -> str:
    missing = [n for n in sf.demands.nodes if n not in {tr.node.id for tr in sf.trajectories}]
    if sf.trajectories and missing:
        raise InvalidInputError(f"demand sources without trajectories: {missing}")
    header = {
        "format": sf.format,
        "version": FORMAT_VERSION,
        "generator": f"aeronet {__version__}",
        "time_grid": {"t0": sf.grid.t0, "dt": sf.grid.dt, "steps": sf.grid.steps},
        "budget": sf.budget.to_dict(),
        "nodes": [{"id": tr.node.id, "kind": tr.node.kind.value}
                  for tr in sorted(sf.trajectories, key=lambda tr: tr.node.id)],
        "metadata": sf.metadata,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for tr in sorted(sf.trajectories, key=lambda tr: tr.node.id):
        for t, p in tr.waypoints:
            lines.append(json.dumps({"t": t, "id": tr.node.id, "x": p.x, "y": p.y, "z": p.z}, sort_keys=True))
    for n in sf.demands.nodes:
        for t, v in sf.demands.series(n):
            lines.append(json.dumps({"id": n, "t": t, "offered_bps": v}, sort_keys=True))
    return "\n".join(lines) + "\n"


def save_scenario(sf: ScenarioFile, path) -> None:
    Path(path).write_text(dumps_scenario(sf))


def _need(rec: dict, keys: Iterable[str], lineno: int, path):
    miss = [k for k in keys if k not in rec]
    if miss:
        raise SchemaError(f"missing field(s) {', '.join(miss)}", lineno, path)


def loads_scenario(text: str, path=None) -> ScenarioFile:
    header = None
    wps: dict[int, list[tuple[float, Vec3]]] = {}
    dem: dict[int, list[tuple[float, float]]] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno, path) from None
        if not isinstance(rec, dict):
            raise ParseError("record is not an object", lineno, path)
        if header is None:
            _need(rec, ("format", "version", "time_grid"), lineno, path)
            if rec["format"] not in FORMATS:
                raise SchemaError(f"unknown format {rec['format']!r}", lineno, path)
            if rec["version"] != FORMAT_VERSION:
                raise SchemaError(f"unsupported version {rec['version']}", lineno, path)
            _need(rec["time_grid"], ("t0", "dt", "steps"), lineno, path)
            header = rec
            continue
        try:
            if "offered_bps" in rec:
                _need(rec, ("id", "t"), lineno, path)
                dem.setdefault(int(rec["id"]), []).append((float(rec["t"]), float(rec["offered_bps"])))
            else:
                _need(rec, ("t", "id", "x", "y", "z"), lineno, path)
                wps.setdefault(int(rec["id"]), []).append(
                    (float(rec["t"]), Vec3(float(rec["x"]), float(rec["y"]), float(rec["z"]))))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), lineno, path) from None
    if header is None:
        raise SchemaError("empty file (no header)", 1, path)
    kinds = {int(n["id"]): n.get("kind", "FMAP") for n in header.get("nodes", [])}
    trajs = []
    for nid in sorted(wps):
        try:
            trajs.append(Trajectory(NodeId(nid, kinds.get(nid, "FMAP")), tuple(wps[nid])))
        except InvalidInputError as exc:
            raise SchemaError(str(exc), None, path) from None
    tg = header["time_grid"]
    try:
        grid = TimeGrid(float(tg["t0"]), float(tg["dt"]), int(tg["steps"]))
        budget = LinkBudget.from_dict(header.get("budget", {}))
        demands = TrafficDemandSet(dem)
    except InvalidInputError as exc:
        raise SchemaError(str(exc), 1, path) from None
    return ScenarioFile(grid, trajs, demands, budget, header.get("metadata", {}), header["format"])


def load_scenario(path) -> ScenarioFile:
    return loads_scenario(Path(path).read_text(), path=str(path))


def rwm_scenario(cfg: RwmConfig, sample_dt: float | None = 1.0,
                 demands: Mapping[int, float] | None = None,
                 budget: LinkBudget | None = None) -> ScenarioFile:
    trajs = generate_rwm(cfg)
    grid = TimeGrid.covering(0.0, cfg.duration, sample_dt or 1.0)
    if sample_dt:
        trajs = [sample_trajectory(tr, grid) for tr in trajs]
    meta = {"seed": cfg.seed, "prng": PRNG, "seeding": SEEDING, "rwm": cfg.to_dict(),
            "sample_dt": sample_dt}
    return ScenarioFile(grid, trajs, TrafficDemandSet.constant(demands or {}), budget or LinkBudget(), meta,
                        "aeronet-trajectory" if not demands else "aeronet-scenario")
