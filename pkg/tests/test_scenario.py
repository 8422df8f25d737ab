import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aeronet.core import NodeId, TimeGrid, Trajectory, Vec3, position_at
from aeronet.errors import InvalidInputError, ParseError, SchemaError
from aeronet.fixtures import SCENARIOS, ZONES, fixture_path, fixture_texts, venue_gwp4, zones_csv
from aeronet.netplan import ZoneGrid
from aeronet.routing import TrafficDemandSet
from aeronet.scenario import (
    DemandLayout, Region, RwmConfig, ScenarioFile, dumps_scenario, generate_rwm, load_scenario,
    loads_scenario, rwm_scenario, save_scenario, segment_speeds, zone_demand_from_ues,
)

REFERENCE_RWM = RwmConfig(box=(80, 80, 25), n_nodes=21, v_min=0.5, v_max=3.0, duration=160, seed=7)


def test_rwm_stays_in_box_and_speed_bounds():
    trajs = generate_rwm(REFERENCE_RWM)
    assert len(trajs) == 21
    for tr in trajs:
        assert tr.waypoints[0][0] == 0 and tr.waypoints[-1][0] == 160
        for _, p in tr.waypoints:
            assert 0 <= p.x <= 80 and 0 <= p.y <= 80 and 0 <= p.z <= 25
        for v in segment_speeds(tr):
            assert 0.5 - 1e-9 <= v <= 3.0 + 1e-9
        for t in np.linspace(0, 160, 97):
            p = position_at(tr, t)
            assert 0 <= p.x <= 80 and 0 <= p.y <= 80 and 0 <= p.z <= 25


def test_rwm_degenerate_speed():
    for tr in generate_rwm(RwmConfig(n_nodes=4, v_min=1.7, v_max=1.7, seed=2)):
        assert all(v == pytest.approx(1.7, rel=1e-12) for v in segment_speeds(tr))


def test_rwm_deterministic_and_seed_sensitive():
    a = dumps_scenario(rwm_scenario(REFERENCE_RWM))
    assert a == dumps_scenario(rwm_scenario(REFERENCE_RWM))
    other = RwmConfig(**{**REFERENCE_RWM.to_dict(), "box": (80, 80, 25), "seed": 8})
    assert a != dumps_scenario(rwm_scenario(other))


def test_rwm_pause_and_pinned_gw():
    trajs = generate_rwm(RwmConfig(n_nodes=3, pause=2.0, pin_gw=True, seed=1))
    assert len(trajs[0].waypoints) == 1
    assert 0.0 in segment_speeds(trajs[1])


def test_rwm_config_validation():
    for bad in ({"v_min": 0}, {"v_min": 3, "v_max": 2}, {"duration": 0}, {"n_nodes": 0}, {"pause": -1}):
        with pytest.raises(InvalidInputError):
            RwmConfig(**bad)


def test_sampled_export_on_one_second_grid():
    sf = rwm_scenario(RwmConfig(n_nodes=2, duration=10, seed=4))
    assert [t for t, _ in sf.trajectories[0].waypoints] == [float(k) for k in range(11)]
    assert sf.metadata["prng"] == "PCG64"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.floats(1, 30))
def test_scenario_round_trip(seed, n, duration):
    sf = rwm_scenario(RwmConfig(n_nodes=n, duration=duration, seed=seed), demands={k: 1e6 * k for k in range(1, n)})
    text = dumps_scenario(sf)
    back = loads_scenario(text)
    assert dumps_scenario(back) == text
    assert back.trajectories == sf.trajectories
    assert back.demands == sf.demands


def test_file_round_trip(tmp_path):
    sf = venue_gwp4()
    save_scenario(sf, tmp_path / "v.ndjson")
    back = load_scenario(tmp_path / "v.ndjson")
    assert back.trajectories == sf.trajectories and back.metadata == sf.metadata


def test_shipped_fixtures_match_builders():
    texts = fixture_texts()
    for name, text in texts.items():
        assert fixture_path(name).read_text() == text, name
    for name, build in SCENARIOS.items():
        sf = load_scenario(fixture_path(f"{name}.ndjson"))
        ref = build()
        assert sf.trajectories == ref.trajectories
        assert sf.demands == ref.demands
        assert dumps_scenario(sf) == texts[f"{name}.ndjson"]


def test_venue_fixture_square():
    sf = load_scenario(fixture_path("venue_gwp4.ndjson"))
    pts = [tuple(tr.waypoints[0][1]) for tr in sf.trajectories]
    assert pts == [(0, 0, 10), (30, 0, 10), (0, 30, 10), (30, 30, 10)]


def test_truncated_file_reports_line():
    text = fixture_path("reference_case.ndjson").read_text()
    lines = text.split("\n")
    broken = "\n".join(lines[:3] + [lines[3][: len(lines[3]) // 2]] + lines[4:])
    with pytest.raises(ParseError) as e:
        loads_scenario(broken, path="x.ndjson")
    assert e.value.lineno == 4
    assert "x.ndjson" in str(e.value) and "4" in str(e.value)


def test_schema_errors():
    with pytest.raises(SchemaError):
        loads_scenario('{"format": "aeronet-scenario"}\n')
    with pytest.raises(SchemaError):
        loads_scenario('{"format": "other", "version": 1, "time_grid": {"t0": 0, "dt": 1, "steps": 1}}\n')
    head = '{"format": "aeronet-scenario", "version": 1, "time_grid": {"t0": 0, "dt": 1, "steps": 1}}\n'
    with pytest.raises(SchemaError) as e:
        loads_scenario(head + '{"t": 0, "id": 1, "x": 0}\n')
    assert e.value.lineno == 2
    with pytest.raises(SchemaError):
        loads_scenario("")


def test_demand_source_needs_trajectory():
    sf = ScenarioFile(TimeGrid(0, 1, 1), [Trajectory.static(NodeId(1), Vec3(0, 0, 0))],
                      TrafficDemandSet.constant({2: 1.0}))
    with pytest.raises(InvalidInputError):
        dumps_scenario(sf)


def test_zone_demand_from_ues():
    g = ZoneGrid(20, 20, 10)
    ues = [Vec3(5, 5, 0), Vec3(15, 5, 0), Vec3(5, 15, 0), Vec3(15, 15, 0)]
    out = zone_demand_from_ues(ues, [1.0, 2.0, 3.0, 4.0], g)
    assert out.demand.tolist() == [[1.0, 3.0], [2.0, 4.0]]
    out = zone_demand_from_ues([Vec3(1, 1, 0)] * 3, [5.0] * 3, g)
    assert out.demand.tolist() == [[15.0, 0.0], [0.0, 0.0]]
    g3 = ZoneGrid(30, 10, 10)
    out = zone_demand_from_ues([Vec3(5, 5, 0), Vec3(15, 5, 0), Vec3(25, 5, 0)], [25e6] * 3, g3)
    assert out.demand.ravel().tolist() == [25e6, 25e6, 25e6]
    with pytest.raises(InvalidInputError) as e:
        zone_demand_from_ues([Vec3(5, 5, 0), Vec3(50, 5, 0)], [1.0, 1.0], g)
    assert "[1]" in str(e.value)


def test_demand_layout():
    lay = DemandLayout(((Region(0, 0, 10, 10, 0, 5), 7.0), (Region(20, 20, 30, 30, 0, 5), 3.0)))
    trajs = lay.place([2, 3], seed=1)
    assert [tr.node.id for tr in trajs] == [1, 2, 3, 4, 5]
    d = lay.demands(trajs)
    assert [d.offered(i, 0) for i in range(1, 6)] == [7.0, 7.0, 3.0, 3.0, 3.0]
    assert lay.offered_at(Vec3(15, 15, 0)) == 0
    with pytest.raises(InvalidInputError):
        DemandLayout(((Region(0, 0, 1, 1), -1.0),))


def test_zone_fixture_csv():
    for name, build in ZONES.items():
        text = fixture_path(f"{name}.csv").read_text()
        assert text == zones_csv(build())
