import math

import pytest
from hypothesis import given, strategies as st

from aeronet.core import NodeId, NodeKind, TimeGrid, Trajectory, Vec3, distance, position_at, straight_line
from aeronet.errors import InvalidInputError

coord = st.floats(-1e3, 1e3, allow_nan=False)
vec = st.builds(Vec3, coord, coord, coord)


def test_position_interpolates():
    tr = Trajectory(NodeId(1), ((0, Vec3(0, 0, 10)), (100, Vec3(50, 0, 10))))
    assert position_at(tr, 60) == Vec3(30, 0, 10)


def test_single_waypoint_holds():
    tr = Trajectory.static(NodeId(1), Vec3(0, 0, 10))
    assert position_at(tr, 999) == Vec3(0, 0, 10)


def test_clamps_outside_span():
    tr = Trajectory(NodeId(1), ((10, Vec3(1, 2, 3)), (20, Vec3(4, 5, 6))))
    assert position_at(tr, -5) == Vec3(1, 2, 3)
    assert position_at(tr, 50) == Vec3(4, 5, 6)


def test_half_meter_per_second_for_130_s():
    tr = straight_line(NodeId(3), Vec3(0, 0, 10), Vec3(100, 0, 10), 0.0, 0.5)
    assert distance(position_at(tr, 0), position_at(tr, 130)) == pytest.approx(65.0, abs=1e-12)


def test_distance_examples():
    assert distance(Vec3(0, 0, 0), Vec3(3, 4, 0)) == 5
    assert distance(Vec3(30, 0, 10), Vec3(30, 30, 10)) == 30
    # independent value: sqrt(6.7^2 + 15.4^2 + 6.7^2)
    assert distance(Vec3(23.3, 15.4, 3.3), Vec3(30, 0, 10)) == pytest.approx(18.08148224, abs=1e-6)


@given(vec, vec, vec)
def test_distance_is_a_metric(a, b, c):
    assert distance(a, b) >= 0
    assert distance(a, b) == distance(b, a)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


@given(st.lists(st.tuples(st.floats(0.01, 50), vec), min_size=2, max_size=6))
def test_position_continuous_at_waypoints(steps):
    t = 0.0
    wps = []
    for dt, p in steps:
        t += dt
        wps.append((t, p))
    tr = Trajectory(NodeId(1), tuple(wps))
    vmax = max(distance(a[1], b[1]) / (b[0] - a[0]) for a, b in zip(wps, wps[1:]))
    eps = 1e-7
    for tw, pw in wps:
        for e in (eps, -eps):
            q = position_at(tr, tw + e)
            assert distance(q, pw) <= vmax * eps * 1.01 + 1e-9


def test_trajectory_rejects_unsorted_times():
    with pytest.raises(InvalidInputError):
        Trajectory(NodeId(1), ((1, Vec3(0, 0, 0)), (1, Vec3(1, 0, 0))))


def test_vec_rejects_nan():
    with pytest.raises(InvalidInputError):
        Vec3(math.nan, 0, 0)


def test_time_grid():
    g = TimeGrid(0, 1, 131)
    assert g.instants()[0] == 0 and g.instants()[-1] == 130
    assert TimeGrid.covering(0, 160, 1).steps == 161
    with pytest.raises(InvalidInputError):
        TimeGrid(0, 0, 3)


def test_node_kinds_order():
    assert NodeId(0, "GW").kind is NodeKind.GW
    assert sorted([NodeId(3), NodeId(1)])[0].id == 1
