"""Command-line entry point (``aeronet``)."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__, kernels
from .channel import McsTable
from .core import NodeKind, position_at
from .errors import AeronetError, InvalidInputError
from .gwp import DemandedFmap, GwpConfig, gwp_algorithm, gwp_over_time, solutions_to_ndjson
from .netplan import PROFILES, FmapState, ZoneGrid, profile, run_netplan
from .pipeline import PipelineConfig, input_hash, read_zone_map, resolve_path, run_pipeline
from .report import compute_distribution
from .routing import RoutingMetric, compute_schedule, schedule_from_ndjson
from .scenario import RwmConfig, dumps_scenario, load_scenario, rwm_scenario
from .sim import MEDIUM_MODES, compare_runs, read_report_csv, run_simulation

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _digest(d: dict) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:16]


def profile_hashes() -> dict[str, str]:
    g = asdict(GwpConfig())
    return {
        **{f"netplan:{name}": cfg.digest() for name, cfg in sorted(PROFILES.items())},
        "gwp:default": _digest(g),
        "routing:default": _digest({"metric": "i2r", "alpha": 1.0, "tie_break": "lexicographic",
                                    "active_set": "two-pass"}),
    }


def version_text() -> str:
    lines = [f"aeronet {__version__} (kernels: {kernels.BACKEND})"]
    lines += [f"{k} {v}" for k, v in profile_hashes().items()]
    return "\n".join(lines)


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = text.lower().split("x")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"bad {what} {text!r}, expected {'x'.join(['N'] * n)}") from None
    if len(vals) != n:
        raise UsageError(f"bad {what} {text!r}, expected {'x'.join(['N'] * n)}")
    return vals


def _path(p: str) -> Path:
    return resolve_path(p, Path.cwd())


def _emit(dest: str | None, text: str) -> None:
    if dest in (None, "-"):
        sys.stdout.write(text)
        return
    p = Path(dest)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    if p.read_text() != text:
        raise AeronetError(f"could not verify {p}")


def _scenario_and_demands(args):
    sf = load_scenario(_path(args.scenario))
    demands = load_scenario(_path(args.demands)).demands if args.demands else sf.demands
    return sf, demands


def _gw_id(sf, override):
    if override is not None:
        return override
    if "gw" in sf.metadata:
        return int(sf.metadata["gw"])
    if sf.gw_id is not None:
        return sf.gw_id
    raise InvalidInputError("no gateway in the scenario; pass --gw")


def _files(args, *names) -> dict:
    return {n: (_path(getattr(args, n)) if getattr(args, n, None) else None) for n in names}


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out")}


def cmd_netplan(args) -> int:
    sf = load_scenario(_path(args.scenario))
    text = _path(args.zones).read_text()
    geom = read_zone_map(text)
    cov = _floats(args.map, 2, "map") if args.map else (geom[:2] if geom else tuple(sf.metadata.get("map", ())))
    zl = args.zone_len or (geom[2] if geom else sf.metadata.get("zone_len"))
    if len(cov) != 2 or not zl:
        raise InvalidInputError("map size unknown; pass --map and --zone-len")
    grid = ZoneGrid.from_csv_text(text, cov[0], cov[1], zl, path=args.zones)
    cfg = profile(args.profile)
    start = [FmapState(tr.node, tr.waypoints[0][1], cfg.r_mean)
             for tr in sf.trajectories if tr.node.kind != NodeKind.GW]
    hist = run_netplan(cfg, grid, start, args.steps)
    h = input_hash(_files(args, "scenario", "zones"), _params(args))
    lines = [json.dumps({"format": "aeronet-netplan", "version": 1, "input_hash": h, "profile": args.profile,
                         "profile_digest": cfg.digest(), "steps": args.steps}, sort_keys=True)]
    for k, states in enumerate(hist):
        for s in states:
            lines.append(json.dumps({"step": k, "id": s.id.id, "x": s.pos.x, "y": s.pos.y, "z": s.pos.z,
                                     "cell_range": s.cell_range}, sort_keys=True))
    _emit(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_route(args) -> int:
    sf, demands = _scenario_and_demands(args)
    gw = _gw_id(sf, args.gw)
    sched = compute_schedule(sf.trajectories, sf.grid, sf.budget, RoutingMetric(args.metric, args.alpha),
                             demands, gw, args.cs_threshold_db)
    h = input_hash(_files(args, "scenario", "demands"), _params(args))
    _emit(args.out, sched.to_ndjson({"input_hash": h}))
    return EXIT_OK


def _gwp_cfg(args, sf) -> GwpConfig:
    cuboid = _floats(args.cuboid, 3, "cuboid") if args.cuboid else tuple(sf.metadata.get("cuboid", (80, 80, 20)))
    return GwpConfig(cuboid=tuple(float(v) for v in cuboid), grid_resolution=args.grid_res,
                     refine_passes=args.refine_passes, power_max_dbm=args.power_max, budget=sf.budget)


def cmd_gwp(args) -> int:
    sf, demands = _scenario_and_demands(args)
    table = McsTable.from_csv(_path(args.mcs)) if args.mcs else McsTable.default()
    cfg = _gwp_cfg(args, sf)
    gw = sf.gw_id
    h = input_hash(_files(args, "scenario", "demands", "mcs"), _params(args))
    if args.over_time:
        sols = gwp_over_time(sf.trajectories, demands, table, sf.grid, cfg, args.sharers,
                             exclude=[gw] if gw is not None else [])
        _emit(args.out, solutions_to_ndjson(sols, {"input_hash": h}))
        return EXIT_OK
    t = sf.grid.t0
    fmaps = []
    for tr in sf.trajectories:
        if tr.node.kind == NodeKind.GW:
            continue
        dem = demands.offered(tr.node.id, t)
        if dem > 0:
            fmaps.append(DemandedFmap(tr.node, position_at(tr, t), dem))
    sol = gwp_algorithm(fmaps, table, args.sharers, cfg, direction=args.direction)
    _emit(args.out, sol.to_json(t, input_hash=h) + "\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sf, demands = _scenario_and_demands(args)
    table = McsTable.from_csv(_path(args.mcs)) if args.mcs else None
    if args.schedule:
        p = _path(args.schedule)
        sched = schedule_from_ndjson(p.read_text(), path=str(p))
        if sched.grid != sf.grid:
            raise InvalidInputError("schedule and scenario use different time grids")
    else:
        sched = compute_schedule(sf.trajectories, sf.grid, sf.budget, RoutingMetric(args.metric, args.alpha),
                                 demands, _gw_id(sf, args.gw))
    h = input_hash(_files(args, "scenario", "demands", "mcs", "schedule"), _params(args))
    rep = run_simulation(sf.trajectories, sf.grid, sf.budget, sched, demands, args.medium_mode,
                         static=args.static, mcs_table=table)
    _emit(args.out, rep.to_csv(f"input_hash={h}"))
    if args.summary:
        summary = rep.summary(input_hash=h)
        if args.compare_static and not args.static:
            base = run_simulation(sf.trajectories, sf.grid, sf.budget, sched, demands, args.medium_mode,
                                  static=True, mcs_table=table)
            summary["gain_vs_static"] = compare_runs(rep, base)
        _emit(args.summary, json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_scenario_gen(args) -> int:
    if not args.rwm:
        raise UsageError("scenario-gen: only --rwm generation is available")
    cfg = RwmConfig(box=_floats(args.box, 3, "box"), n_nodes=args.nodes, v_min=args.v_min, v_max=args.v_max,
                    pause=args.pause, duration=args.duration, seed=args.seed,
                    gw_id=None if args.no_gw else 0, pin_gw=args.pin_gw)
    sf = rwm_scenario(cfg, sample_dt=args.sample_dt or None)
    sf.metadata["input_hash"] = input_hash({}, _params(args))
    _emit(args.out, dumps_scenario(sf))
    return EXIT_OK


METRIC_COLUMNS = {"throughput": "achieved_bps", "bottleneck": "bottleneck_bps", "occupancy": "occupancy"}


def _samples(rows, metric: str, flow: int | None) -> list[float]:
    col = METRIC_COLUMNS[metric]
    per_t: dict[float, float] = {}
    for r in rows:
        if flow is not None and r["src"] != flow:
            continue
        if metric == "occupancy":
            per_t[r["t"]] = r[col]
        else:
            per_t[r["t"]] = per_t.get(r["t"], 0.0) + r[col]
    return [per_t[t] for t in sorted(per_t)]


def cmd_report(args) -> int:
    p = _path(args.input)
    rows = read_report_csv(p.read_text())
    samples = _samples(rows, args.metric, args.flow)
    dist = compute_distribution(samples)
    h = input_hash(_files(args, "input", "baseline"), _params(args))
    text = dist.percentile_csv(f"input_hash={h} metric={args.metric}")
    if args.baseline:
        b = compute_distribution(_samples(read_report_csv(_path(args.baseline).read_text()), args.metric, args.flow))
        gains = []
        for q, v in dist.percentiles.items():
            bv = b.percentiles[q]
            gains.append(f"{q},{v!r},{bv!r},{(v - bv) / bv if bv else 'undefined'}")
        text += "percentile,value,baseline_value,gain\n" + "\n".join(gains) + "\n"
    _emit(args.out, text)
    if args.curve_out:
        _emit(args.curve_out, dist.curve_csv(f"input_hash={h} metric={args.metric}"))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = PipelineConfig.from_json(_path(args.config))
    if args.out_dir:
        cfg.out_dir = str(Path(args.out_dir).resolve())
    manifest = run_pipeline(cfg)
    print(json.dumps({"input_hash": manifest["input_hash"],
                      "outputs": [s["file"] for s in manifest["stages"]]}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aeronet", description="Traffic-aware flying network planning and evaluation.")
    p.add_argument("--version", action="store_true", help="print version and algorithm profile hashes")
    p.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def scen(sp, demands=True):
        sp.add_argument("--scenario", required=True, help="scenario NDJSON (fixture:NAME for packaged ones)")
        if demands:
            sp.add_argument("--demands", help="demand NDJSON overriding the scenario's demands")
        sp.add_argument("--out", default="-", help="output file (default stdout)")

    s = sub.add_parser("netplan", help="run NetPlan placement cycles")
    scen(s, demands=False)
    s.add_argument("--zones", required=True, help="zone demand CSV")
    s.add_argument("--map", help="map size XxY in meters (default from the zones file)")
    s.add_argument("--zone-len", type=float)
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--profile", default="default", choices=sorted(PROFILES))
    s.set_defaults(func=cmd_netplan)

    s = sub.add_parser("route", help="compute a forwarding schedule")
    scen(s)
    s.add_argument("--metric", default="i2r", choices=["euclidean", "i2r", "capacity"])
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--gw", type=int)
    s.add_argument("--cs-threshold-db", type=float)
    s.set_defaults(func=cmd_route)

    s = sub.add_parser("gwp", help="place the gateway")
    scen(s)
    s.add_argument("--mcs", help="MCS table CSV (default: built-in table)")
    s.add_argument("--cuboid", help="XxYxZ in meters (default from scenario metadata)")
    s.add_argument("--sharers", type=int)
    s.add_argument("--direction", default="uplink", choices=["uplink", "downlink"])
    s.add_argument("--grid-res", type=float, default=1.0)
    s.add_argument("--refine-passes", type=int, default=3)
    s.add_argument("--power-max", type=float, default=40.0)
    s.add_argument("--over-time", action="store_true", help="solve at every time-grid instant")
    s.set_defaults(func=cmd_gwp)

    s = sub.add_parser("simulate", help="flow-level evaluation of a schedule")
    scen(s)
    s.add_argument("--schedule", help="schedule NDJSON (default: compute with --metric)")
    s.add_argument("--metric", default="i2r", choices=["euclidean", "i2r", "capacity"])
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--gw", type=int)
    s.add_argument("--medium-mode", default="bottleneck", choices=list(MEDIUM_MODES))
    s.add_argument("--mcs")
    s.add_argument("--static", action="store_true", help="freeze first-instant paths")
    s.add_argument("--summary", help="write JSON summary here")
    s.add_argument("--compare-static", action="store_true", help="add gain over frozen routing to the summary")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("scenario-gen", help="generate mobility scenarios")
    s.add_argument("--rwm", action="store_true", help="random waypoint model")
    s.add_argument("--nodes", type=int, default=21)
    s.add_argument("--box", default="80x80x25")
    s.add_argument("--duration", type=float, default=160.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--v-min", type=float, default=0.5)
    s.add_argument("--v-max", type=float, default=3.0)
    s.add_argument("--pause", type=float, default=0.0)
    s.add_argument("--pin-gw", action="store_true", help="keep node 0 (the GW) at its start point")
    s.add_argument("--no-gw", action="store_true", help="all nodes are FMAPs")
    s.add_argument("--sample-dt", type=float, default=1.0, help="export sampling period; 0 keeps raw waypoints")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_scenario_gen)

    s = sub.add_parser("report", help="percentile tables from a simulation CSV")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--metric", default="throughput", choices=sorted(METRIC_COLUMNS))
    s.add_argument("--flow", type=int, help="restrict to one source")
    s.add_argument("--baseline", help="second simulation CSV to compute gains against")
    s.add_argument("--curve-out", help="write CDF/CCDF curve CSV here")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("pipeline", help="run all stages from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_pipeline)
    return p


def _fail(exc: Exception, json_errors: bool, code: int) -> int:
    if json_errors:
        if isinstance(exc, AeronetError):
            d = exc.to_dict()
        elif isinstance(exc, UsageError):
            d = {"error": "usage", "message": str(exc)}
        else:
            d = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(d, sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"aeronet: error: {exc}\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    if json_errors:
        argv = [a for a in argv if a != "--json-errors"]
    try:
        args = build_parser().parse_args(argv)
        if args.version:
            print(version_text())
            return EXIT_OK
        if not args.command:
            raise UsageError("aeronet: a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        return _fail(exc, json_errors, EXIT_USAGE)
    except (AeronetError, OSError, ValueError) as exc:
        return _fail(exc, json_errors, EXIT_FAIL)


if __name__ == "__main__":
    sys.exit(main())
