"""Geometry, time discretization and trajectory sampling."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise InvalidInputError(f"non-finite coordinate in {self!r}")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y
        yield self.z

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def of(cls, seq: Sequence[float]) -> "Vec3":
        x, y, z = seq
        return cls(float(x), float(y), float(z))


def distance(a: Vec3, b: Vec3) -> float:
    """Euclidean distance in meters."""
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def horizontal_distance(a: Vec3, b: Vec3) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = t0 + k * dt`` for ``k in range(steps)``."""

    t0: float = 0.0
    dt: float = 1.0
    steps: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInputError("TimeGrid.dt must be > 0")
        if self.steps < 1:
            raise InvalidInputError("TimeGrid.steps must be >= 1")

    def instants(self) -> list[float]:
        return [self.t0 + k * self.dt for k in range(self.steps)]

    def __len__(self) -> int:
        return self.steps

    @classmethod
    def covering(cls, t0: float, t_end: float, dt: float = 1.0) -> "TimeGrid":
        """Grid from t0 through t_end inclusive."""
        steps = int(math.floor((t_end - t0) / dt + 1e-9)) + 1
        return cls(t0, dt, steps)


class NodeKind(str, Enum):
    FMAP = "FMAP"
    GW = "GW"
    UE = "UE"


@dataclass(frozen=True, order=True)
class NodeId:
    id: int
    kind: NodeKind = NodeKind.FMAP

    def __post_init__(self):
        if self.id < 0:
            raise InvalidInputError("node id must be non-negative")
        object.__setattr__(self, "kind", NodeKind(self.kind))

    def __int__(self) -> int:
        return self.id


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear motion through timed waypoints."""

    node: NodeId
    waypoints: tuple[tuple[float, Vec3], ...] = field(default_factory=tuple)

    def __post_init__(self):
        wps = tuple((float(t), p if isinstance(p, Vec3) else Vec3.of(p)) for t, p in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        for (ta, _), (tb, _) in zip(wps, wps[1:]):
            if not tb > ta:
                raise InvalidInputError(
                    f"waypoint times for node {self.node.id} must be strictly increasing"
                )

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.waypoints]

    @classmethod
    def static(cls, node: NodeId, pos: Vec3, t: float = 0.0) -> "Trajectory":
        return cls(node, ((t, pos),))


def position_at(traj: Trajectory, t: float) -> Vec3:
    """Interpolate the position at time ``t``.

    Times outside the waypoint span clamp to the first/last waypoint.
    """
    wps = traj.waypoints
    if not wps:
        raise InvalidInputError(f"trajectory of node {traj.node.id} has no waypoints")
    if t <= wps[0][0]:
        return wps[0][1]
    if t >= wps[-1][0]:
        return wps[-1][1]
    k = bisect.bisect_right([w[0] for w in wps], t)
    (ta, pa), (tb, pb) = wps[k - 1], wps[k]
    f = (t - ta) / (tb - ta)
    return Vec3(pa.x + f * (pb.x - pa.x), pa.y + f * (pb.y - pa.y), pa.z + f * (pb.z - pa.z))


def positions_at(trajectories: Sequence[Trajectory], t: float) -> dict[int, Vec3]:
    return {tr.node.id: position_at(tr, t) for tr in trajectories}


def straight_line(node: NodeId, start: Vec3, end: Vec3, t_start: float, speed: float) -> Trajectory:
    """Constant-speed segment from ``start`` to ``end``, holding afterwards."""
    if speed <= 0:
        raise InvalidInputError("speed must be > 0")
    d = distance(start, end)
    if d == 0:
        return Trajectory(node, ((t_start, start),))
    return Trajectory(node, ((t_start, start), (t_start + d / speed, end)))
