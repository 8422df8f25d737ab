"""End-to-end run: NetPlan, trajectory synthesis, gateway placement, routing, simulation.

Every stage writes its export into the run directory. If a stage fails,
the files already written are renamed with a ``.partial`` suffix and a
:class:`~aeronet.errors.StageError` naming the stage is raised.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .channel import McsTable
from .core import NodeId, NodeKind, TimeGrid, Trajectory, straight_line
from .errors import AeronetError, InvalidInputError, StageError
from .fixtures import fixture_path
from .gwp import GwpConfig, gwp_over_time, solutions_to_ndjson
from .netplan import FmapState, ZoneGrid, profile, run_netplan, served_demand
from .routing import RoutingMetric, TrafficDemandSet, compute_schedule
from .scenario import ScenarioFile, dumps_scenario, load_scenario
from .sim import MEDIUM_MODES, compare_runs, run_simulation

STAGES = ("netplan", "trajectories", "gwp", "schedule", "simulate")
STAGE_FILES = {
    "netplan": "netplan.ndjson",
    "trajectories": "trajectories.ndjson",
    "gwp": "gwp.ndjson",
    "schedule": "schedule.ndjson",
    "simulate": "sim.csv",
}


def resolve_path(p: str, base: Path) -> Path:
    """``fixture:NAME`` points into the packaged fixtures; other paths are relative to ``base``."""
    if p.startswith("fixture:"):
        return fixture_path(p[len("fixture:"):])
    q = Path(p)
    return q if q.is_absolute() else base / q


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def input_hash(files: dict[str, Path | None], params: dict) -> str:
    """Provenance hash over input file contents and the run parameters."""
    h = hashlib.sha256()
    for label in sorted(files):
        p = files[label]
        h.update(label.encode())
        h.update(b"\0")
        h.update((file_digest(p) if p is not None else "-").encode())
        h.update(b"\0")
    h.update(json.dumps(params, sort_keys=True, default=str).encode())
    return h.hexdigest()[:16]


def read_zone_map(text: str) -> tuple[float, float, float] | None:
    """``(cov_x, cov_y, zone_len)`` from a ``# map X Y L`` comment, if present."""
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 5 and parts[:2] == ["#", "map"]:
            try:
                return float(parts[2]), float(parts[3]), float(parts[4])
            except ValueError:
                return None
    return None


@dataclass
class PipelineConfig:
    scenario: str
    zones: str
    out_dir: str = "run"
    demands: str | None = None
    mcs: str | None = None
    map: tuple[float, float] | None = None
    zone_len: float | None = None
    netplan_profile: str = "default"
    netplan_steps: int = 50
    speed: float = 3.0
    dt: float = 1.0
    gw_id: int = 0
    metric: str = "i2r"
    alpha: float = 1.0
    medium_mode: str = "airtime"
    cuboid: tuple[float, float, float] | None = None
    grid_resolution: float = 1.0
    refine_passes: int = 3
    seed: int = 0
    base_dir: str = field(default=".", repr=False)

    def __post_init__(self):
        if self.netplan_steps < 1:
            raise InvalidInputError("netplan_steps must be >= 1")
        if not self.speed > 0:
            raise InvalidInputError("speed must be > 0")
        if not self.dt > 0:
            raise InvalidInputError("dt must be > 0")
        if self.medium_mode not in MEDIUM_MODES:
            raise InvalidInputError(f"medium_mode must be one of {MEDIUM_MODES}")
        RoutingMetric(self.metric, self.alpha)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        p = Path(path)
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{p}: invalid JSON config ({exc.msg})") from None
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        extra = sorted(set(raw) - known)
        if extra:
            raise InvalidInputError(f"unknown config keys: {', '.join(extra)}")
        for k in ("map", "cuboid"):
            if raw.get(k) is not None:
                raw[k] = tuple(float(v) for v in raw[k])
        return cls(**raw, base_dir=str(p.parent))

    def params(self) -> dict:
        # where inputs are resolved from and where outputs go are not inputs
        d = asdict(self)
        d.pop("base_dir")
        d.pop("out_dir")
        return d

    def path(self, attr: str) -> Path | None:
        v = getattr(self, attr)
        return None if v is None else resolve_path(v, Path(self.base_dir))


class _Run:
    def __init__(self, out: Path):
        self.out = out
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        p = self.out / name
        p.write_text(text)
        if p.read_text() != text:
            raise AeronetError(f"could not verify {p}")
        self.written.append(p)
        return p

    def mark_partial(self):
        for p in self.written:
            if p.exists():
                p.replace(p.with_name(p.name + ".partial"))


def placement_demands(demands: TrafficDemandSet, table: McsTable) -> tuple[TrafficDemandSet, list[int]]:
    """Demands for gateway placement, capped at the top MCS rate's fair share.

    A saturated FMAP cannot carry more than that share anyway; placing for
    the top MCS row is the best the gateway can do for it. Returns the capped
    set and the ids that hit the cap.
    """
    top = table.rows[-1][1]
    series, capped = {}, set()
    for n in demands.nodes:
        pts = []
        for t, v in demands.series(n):
            sharers = sum(1 for m in demands.nodes if demands.offered(m, t) > 0)
            cap = top / max(sharers, 1)
            if v > cap:
                capped.add(n)
            pts.append((t, min(v, cap)))
        series[n] = pts
    return TrafficDemandSet(series), sorted(capped)


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write the manifest; returns the manifest dict."""
    out = resolve_path(cfg.out_dir, Path(cfg.base_dir))
    out.mkdir(parents=True, exist_ok=True)
    for name in list(STAGE_FILES.values()) + ["summary.json", "manifest.json"]:
        for stale in (out / name, out / (name + ".partial")):
            if stale.exists():
                stale.unlink()
    run = _Run(out)
    inputs = {k: cfg.path(k) for k in ("scenario", "zones", "demands", "mcs")}
    h = input_hash(inputs, cfg.params())
    stage = "load"
    try:
        sf = load_scenario(inputs["scenario"])
        zones_text = inputs["zones"].read_text()
        geom = read_zone_map(zones_text)
        meta_map = sf.metadata.get("map")
        cov = cfg.map or (geom[:2] if geom else None) or (tuple(meta_map) if meta_map else None)
        zl = cfg.zone_len or (geom[2] if geom else None) or sf.metadata.get("zone_len")
        if cov is None or zl is None:
            raise InvalidInputError("map size and zone length are not given anywhere")
        zones = ZoneGrid.from_csv_text(zones_text, cov[0], cov[1], zl, path=str(inputs["zones"]))
        table = McsTable.from_csv(inputs["mcs"]) if inputs["mcs"] else McsTable.default()
        np_cfg = profile(cfg.netplan_profile)
        fmap_trajs = [tr for tr in sf.trajectories if tr.node.kind != NodeKind.GW]
        if not fmap_trajs:
            raise InvalidInputError("scenario has no FMAPs")
        if any(tr.node.id == cfg.gw_id for tr in fmap_trajs):
            raise InvalidInputError(f"gw_id {cfg.gw_id} collides with an FMAP id")

        stage = "netplan"
        start = [FmapState(tr.node, tr.waypoints[0][1], np_cfg.r_mean) for tr in fmap_trajs]
        history = run_netplan(np_cfg, zones, start, cfg.netplan_steps)
        lines = [json.dumps({"format": "aeronet-netplan", "version": 1, "input_hash": h,
                             "profile": cfg.netplan_profile, "profile_digest": np_cfg.digest(),
                             "steps": cfg.netplan_steps}, sort_keys=True)]
        for k, states in enumerate(history):
            for s in states:
                lines.append(json.dumps({"step": k, "id": s.id.id, "x": s.pos.x, "y": s.pos.y,
                                         "z": s.pos.z, "cell_range": s.cell_range}, sort_keys=True))
        run.write(STAGE_FILES["netplan"], "\n".join(lines) + "\n")

        stage = "trajectories"
        final = history[-1]
        moved = [straight_line(a.id, a.pos, b.pos, 0.0, cfg.speed) for a, b in zip(start, final)]
        t_end = max(tr.waypoints[-1][0] for tr in moved)
        grid = TimeGrid.covering(0.0, max(t_end, cfg.dt), cfg.dt)
        if inputs["demands"]:
            demands = load_scenario(inputs["demands"]).demands
        else:
            served = {n: v for n, v in served_demand(zones, final).items() if v > 0}
            demands = TrafficDemandSet.constant(served)
        if not any(v > 0 for v in demands.at(grid.t0).values()):
            raise InvalidInputError("no FMAP carries demand")
        traj_file = ScenarioFile(grid, moved, demands, sf.budget,
                                 {"input_hash": h, "speed": cfg.speed, "seed": cfg.seed})
        run.write(STAGE_FILES["trajectories"], dumps_scenario(traj_file))

        stage = "gwp"
        cuboid = cfg.cuboid or tuple(sf.metadata.get("cuboid") or (cov[0], cov[1], 20.0))
        gcfg = GwpConfig(cuboid=tuple(cuboid), grid_resolution=cfg.grid_resolution,
                         refine_passes=cfg.refine_passes, budget=sf.budget)
        place_dem, capped = placement_demands(demands, table)
        sols = gwp_over_time(moved, place_dem, table, grid, gcfg)
        run.write(STAGE_FILES["gwp"], solutions_to_ndjson(sols, {"input_hash": h, "capped": capped}))
        gw_traj = Trajectory(NodeId(cfg.gw_id, NodeKind.GW), tuple((t, s.gw_pos) for t, s in sols))

        stage = "schedule"
        # every UAV transmits at the common power placement settled on
        backhaul = sf.budget.with_power(max(s.tx_power_dbm for _, s in sols))
        everyone = moved + [gw_traj]
        metric = RoutingMetric(cfg.metric, cfg.alpha)
        sched = compute_schedule(everyone, grid, backhaul, metric, demands, cfg.gw_id)
        run.write(STAGE_FILES["schedule"], sched.to_ndjson({"input_hash": h}))

        stage = "simulate"
        rep = run_simulation(everyone, grid, backhaul, sched, demands, cfg.medium_mode,
                             mcs_table=table if cfg.medium_mode != "bottleneck" else None)
        base = run_simulation(everyone, grid, backhaul, sched, demands, cfg.medium_mode, static=True,
                              mcs_table=table if cfg.medium_mode != "bottleneck" else None)
        run.write(STAGE_FILES["simulate"], rep.to_csv(f"input_hash={h}"))
        summary = rep.summary(input_hash=h, backhaul_tx_power_dbm=backhaul.tx_power_dbm)
        summary["gain_vs_static"] = compare_runs(rep, base)
        run.write("summary.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
    except AeronetError as exc:
        run.mark_partial()
        raise StageError(stage, exc) from exc
    except (ValueError, OSError, KeyError, ArithmeticError) as exc:
        run.mark_partial()
        raise StageError(stage, exc) from exc

    manifest = {
        "format": "aeronet-manifest",
        "version": 1,
        "input_hash": h,
        "config": cfg.params(),
        "inputs": {k: (file_digest(p) if p else None) for k, p in inputs.items()},
        "stages": [{"stage": s, "file": STAGE_FILES[s], "sha256": file_digest(out / STAGE_FILES[s])}
                   for s in STAGES],
        "summary": {"file": "summary.json", "sha256": file_digest(out / "summary.json")},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest

