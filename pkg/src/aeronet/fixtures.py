"""Pinned fixture scenarios.

The builders here are the source of truth; the files under
``aeronet/fixtures/`` are generated from them by :func:`write_fixtures`
and checked against them in the test suite.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import LinkBudget, McsTable
from .core import NodeId, NodeKind, TimeGrid, Trajectory, Vec3
from .gwp import fair_share
from .netplan import ZoneGrid
from .routing import TrafficDemandSet
from .scenario import DemandLayout, Region, ScenarioFile, dumps_scenario

VENUE_CUBOID = (30.0, 30.0, 20.0)
SCENARIO_B_CUBOID = (80.0, 80.0, 20.0)
NETPLAN_MAP = (100.0, 100.0, 10.0)  # cov_x, cov_y, zone_len
HOTSPOT_ZONE = (7, 7)
HOTSPOT_BPS = 50e6
UNIFORM_ZONE_BPS = 25e6


def venue_gwp4() -> ScenarioFile:
    """Four FMAPs on a 30 m square at 10 m; the x = 30 pair asks for 0.75 L."""
    L = fair_share(780e6, 4)
    corners = [(0.0, 0.0), (30.0, 0.0), (0.0, 30.0), (30.0, 30.0)]
    trajs = [Trajectory.static(NodeId(k + 1), Vec3(x, y, 10.0)) for k, (x, y) in enumerate(corners)]
    demands = TrafficDemandSet.constant({1: 0.25 * L, 2: 0.75 * L, 3: 0.25 * L, 4: 0.75 * L})
    return ScenarioFile(TimeGrid(0.0, 1.0, 1), trajs, demands, LinkBudget(),
                        {"fixture": "venue_gwp4", "cuboid": list(VENUE_CUBOID)})


def venue_gwp4_demands() -> ScenarioFile:
    v = venue_gwp4()
    return ScenarioFile(v.grid, [], v.demands, v.budget, {"fixture": "venue_gwp4_demands"}, "aeronet-demand")


def reference_case() -> ScenarioFile:
    """Two static relays, a static GW and one source crossing from relay 1 to relay 2.

    The source moves along +x at 0.5 m/s for 130 s. Relay 1 and relay 2 are
    46 m apart, just beyond link range, so every route is source-relay-GW.
    """
    gw = Trajectory.static(NodeId(0, NodeKind.GW), Vec3(38.0, -24.5, 13.0))
    r1 = Trajectory.static(NodeId(1), Vec3(0.0, 0.0, 10.0))
    r2 = Trajectory.static(NodeId(2), Vec3(46.0, 0.0, 10.0))
    src = Trajectory(NodeId(3), ((0.0, Vec3(-23.0, 23.0, 10.0)), (130.0, Vec3(42.0, 23.0, 10.0))))
    return ScenarioFile(TimeGrid(0.0, 1.0, 131), [gw, r1, r2, src],
                        TrafficDemandSet.constant({3: 10e9}), LinkBudget(),
                        {"fixture": "reference_case", "gw": 0})


INTERFERENCE_POSITIONS = {
    0: (0.0, 0.0), 1: (-33.5, 77.5), 2: (-50.5, 36.5), 3: (-38.0, 0.0), 4: (0.0, 36.0),
    5: (33.5, 77.5), 6: (50.5, 36.5), 7: (38.0, 0.0), 8: (0.0, 66.0),
}
SHARED_RELAY = 8


def interference9() -> ScenarioFile:
    """Two sources (1, 5) that can share relay 8 or use their own chains.

    Paths 1-2-3-0 and 5-6-7-0 are node-disjoint; 1-8-4-0 and 5-8-4-0 are
    shorter but meet at relay 8, which hears both sources.
    """
    trajs = []
    for n, (x, y) in INTERFERENCE_POSITIONS.items():
        kind = NodeKind.GW if n == 0 else NodeKind.FMAP
        trajs.append(Trajectory.static(NodeId(n, kind), Vec3(x, y, 10.0)))
    return ScenarioFile(TimeGrid(0.0, 1.0, 1), trajs,
                        TrafficDemandSet.constant({1: 20e6, 5: 20e6}), LinkBudget(),
                        {"fixture": "interference9", "gw": 0, "shared_relay": SHARED_RELAY})


def scenario_b_layout() -> DemandLayout:
    L = fair_share(780e6, 10)
    return DemandLayout((
        (Region(0.0, 16.0, 30.0, 46.0, 5.0, 15.0), 0.9 * L),
        (Region(45.0, 45.0, 80.0, 80.0, 5.0, 15.0), 0.1 * L),
    ))


def scenario_b() -> ScenarioFile:
    """Ten FMAPs in two demand zones (five heavy, five light) in an 80x80x20 m cuboid."""
    layout = scenario_b_layout()
    trajs = layout.place([5, 5], seed=11)
    return ScenarioFile(TimeGrid(0.0, 1.0, 1), trajs, layout.demands(trajs), LinkBudget(),
                        {"fixture": "scenario_b", "cuboid": list(SCENARIO_B_CUBOID), "layout_seed": 11})


def _netplan_file(name: str, xy) -> ScenarioFile:
    trajs = [Trajectory.static(NodeId(k + 1), Vec3(x, y, 10.0)) for k, (x, y) in enumerate(xy)]
    cov_x, cov_y, zl = NETPLAN_MAP
    return ScenarioFile(TimeGrid(0.0, 1.0, 1), trajs, TrafficDemandSet(), LinkBudget(),
                        {"fixture": name, "map": [cov_x, cov_y], "zone_len": zl,
                         "zones": f"{name}_zones.csv"})


def netplan_concentrated() -> ScenarioFile:
    return _netplan_file("netplan_concentrated", [(25.0, 25.0), (75.0, 25.0), (50.0, 75.0)])


def netplan_homogeneous() -> ScenarioFile:
    return _netplan_file("netplan_homogeneous", [(20.0, 30.0), (70.0, 20.0), (40.0, 80.0), (80.0, 70.0)])


def concentrated_zones() -> ZoneGrid:
    cov_x, cov_y, zl = NETPLAN_MAP
    dem = np.zeros((int(cov_x / zl), int(cov_y / zl)))
    dem[HOTSPOT_ZONE] = HOTSPOT_BPS
    return ZoneGrid(cov_x, cov_y, zl, dem)


def homogeneous_zones() -> ZoneGrid:
    cov_x, cov_y, zl = NETPLAN_MAP
    return ZoneGrid(cov_x, cov_y, zl, np.full((int(cov_x / zl), int(cov_y / zl)), UNIFORM_ZONE_BPS))


def zones_csv(grid: ZoneGrid) -> str:
    return f"# map {grid.cov_x!r} {grid.cov_y!r} {grid.zone_len!r}\n" + grid.to_csv()


SCENARIOS = {
    "venue_gwp4": venue_gwp4,
    "venue_gwp4_demands": venue_gwp4_demands,
    "reference_case": reference_case,
    "interference9": interference9,
    "scenario_b": scenario_b,
    "netplan_concentrated": netplan_concentrated,
    "netplan_homogeneous": netplan_homogeneous,
}

ZONES = {
    "netplan_concentrated_zones": concentrated_zones,
    "netplan_homogeneous_zones": homogeneous_zones,
}


def pipeline_config(name: str) -> dict:
    """Pipeline config running a NetPlan fixture end to end."""
    return {
        "scenario": f"fixture:{name}.ndjson",
        "zones": f"fixture:{name}_zones.csv",
        "mcs": "fixture:mcs.csv",
        "out_dir": f"run_{name}",
        "netplan_steps": 50,
        "metric": "i2r",
        "alpha": 1.0,
        "medium_mode": "airtime",
        "cuboid": [NETPLAN_MAP[0], NETPLAN_MAP[1], 20.0],
        "seed": 0,
    }


PIPELINES = ("netplan_concentrated", "netplan_homogeneous")


def fixture_texts() -> dict[str, str]:
    """File name -> exact content of every shipped fixture."""
    out = {}
    for name, build in SCENARIOS.items():
        out[f"{name}.ndjson"] = dumps_scenario(build())
    for name, build in ZONES.items():
        out[f"{name}.csv"] = zones_csv(build())
    out["mcs.csv"] = McsTable.default().to_csv()
    for name in PIPELINES:
        out[f"pipeline_{name}.json"] = json.dumps(pipeline_config(name), indent=2, sort_keys=True) + "\n"
    return out


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("aeronet") / "fixtures" / name))


def write_fixtures(directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in fixture_texts().items():
        p = d / name
        p.write_text(text)
        written.append(p)
    return written
