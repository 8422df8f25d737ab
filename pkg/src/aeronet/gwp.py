"""Traffic-aware gateway placement.

Every FMAP's demand fixes a minimum SNR on its link to the gateway, which
for a given transmit power bounds the FMAP-gateway distance by ``d_max``.
The gateway must sit inside the intersection of those spheres; the power
is raised in fixed steps until that intersection (clipped to the cuboid)
is non-empty.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .channel import LinkBudget, McsTable, min_snr_for_demand, snr_db
from .core import NodeId, TimeGrid, Trajectory, Vec3, distance, position_at
from .errors import InfeasibleDeploymentError, InvalidInputError

_DIRECTIONS = np.array(
    [d for d in itertools.product((-1, 0, 1), repeat=3) if d != (0, 0, 0)], dtype=float
)


@dataclass(frozen=True)
class GwpConfig:
    cuboid: tuple[float, float, float] = (80.0, 80.0, 20.0)
    power_start_dbm: float = 0.0
    power_step_dbm: float = 1.0
    power_max_dbm: float = 40.0
    grid_resolution: float = 1.0
    refine_passes: int = 3
    exclusion_radius: float = 0.5
    budget: LinkBudget = field(default_factory=LinkBudget)

    def __post_init__(self):
        if len(self.cuboid) != 3 or not all(v > 0 for v in self.cuboid):
            raise InvalidInputError(f"degenerate cuboid {self.cuboid}")
        if not self.power_step_dbm > 0:
            raise InvalidInputError("power_step_dbm must be > 0")
        if not self.grid_resolution > 0:
            raise InvalidInputError("grid_resolution must be > 0")
        if self.refine_passes < 0:
            raise InvalidInputError("refine_passes must be >= 0")

    @property
    def budget_constant_db(self) -> float:
        return self.budget.budget_constant_db


@dataclass(frozen=True)
class DemandedFmap:
    id: NodeId
    pos: Vec3
    demand_bps: float
    target_snr_db: float | None = None

    def __post_init__(self):
        if not self.demand_bps > 0:
            raise InvalidInputError(f"FMAP {self.id.id}: demand must be > 0")


@dataclass(frozen=True)
class GwpSolution:
    gw_pos: Vec3
    tx_power_dbm: float
    residual: float
    targets_db: tuple[float, ...] = ()
    achieved_db: tuple[float, ...] = ()
    fmap_ids: tuple[int, ...] = ()

    @property
    def feasible(self) -> bool:
        return self.residual <= 0.0

    def to_dict(self, t: float | None = None) -> dict:
        return {
            "t": t,
            "gw_pos": [self.gw_pos.x, self.gw_pos.y, self.gw_pos.z],
            "tx_power_dbm": self.tx_power_dbm,
            "residual": self.residual,
            "fmaps": [
                {"id": i, "target_snr_db": tg, "snr_db": ach}
                for i, tg, ach in zip(self.fmap_ids, self.targets_db, self.achieved_db)
            ],
        }

    def to_json(self, t: float | None = None, **extra) -> str:
        d = self.to_dict(t)
        d.update(extra)
        return json.dumps(d, sort_keys=True)


def fair_share(medium_capacity_bps: float, n_fmaps: int) -> float:
    if n_fmaps < 1:
        raise InvalidInputError("n_fmaps must be >= 1")
    return medium_capacity_bps / n_fmaps


def d_max(budget_constant_db: float, tx_power_dbm: float, target_snr_db: float) -> float:
    """Largest FMAP-gateway distance that still meets ``target_snr_db``."""
    return 10.0 ** ((budget_constant_db + tx_power_dbm - target_snr_db) / 20.0)


def channel_occupancy(demands: Sequence[float], phy_rates: Sequence[float]) -> float:
    """Fraction of airtime used when every flow gets its demand."""
    if len(demands) != len(phy_rates):
        raise InvalidInputError("demands and rates differ in length")
    total = 0.0
    for d, r in zip(demands, phy_rates):
        if not r > 0:
            raise InvalidInputError("PHY rates must be > 0")
        total += d / r
    return total


def _axis(length: float, res: float) -> np.ndarray:
    n = int(math.floor(length / res + 1e-9))
    pts = np.arange(n + 1) * res
    if length - pts[-1] > 1e-9:
        pts = np.append(pts, length)
    return pts


class _Residual:
    def __init__(self, centers: np.ndarray, radii: np.ndarray, cfg: GwpConfig):
        self.centers = centers
        self.radii = radii
        self.hi = np.asarray(cfg.cuboid, dtype=float)
        self.excl2 = cfg.exclusion_radius ** 2

    def __call__(self, p: np.ndarray) -> float:
        if np.any(p < 0) or np.any(p > self.hi):
            return math.inf
        diff = self.centers - p
        d2 = (diff * diff).sum(axis=1)
        if np.any(d2 < self.excl2):
            return math.inf
        return float(np.max(np.sqrt(d2) - self.radii))


def _refine(fn: _Residual, start: np.ndarray, r0: float, step: float, passes: int):
    p, r = start.copy(), r0
    for _ in range(passes):
        step /= 10.0
        while True:
            cand = np.clip(p + step * _DIRECTIONS, 0.0, fn.hi)
            vals = [fn(c) for c in cand]
            k = int(np.argmin(vals))
            if vals[k] < r:
                p, r = cand[k], vals[k]
            else:
                break
    return p, r


def best_point(fmaps: Sequence[DemandedFmap], tx_power_dbm: float, cfg: GwpConfig,
               warm_start: Vec3 | None = None, refine: bool = True):
    """Residual-minimizing point in the cuboid.

    Returns ``(point, residual, coarse_residual)``; residual is
    ``max_i(|p - pos_i| - d_max_i)``.
    """
    if not fmaps:
        raise InvalidInputError("need at least one FMAP")
    if any(f.target_snr_db is None for f in fmaps):
        raise InvalidInputError("every FMAP needs a target SNR")
    K = cfg.budget_constant_db
    centers = np.array([f.pos.as_array() for f in fmaps])
    radii = np.array([d_max(K, tx_power_dbm, f.target_snr_db) for f in fmaps])
    X, Y, Z = cfg.cuboid
    res = cfg.grid_resolution
    xs, ys, zs = _axis(X, res), _axis(Y, res), _axis(Z, res)
    r_coarse, ix, iy, iz = kernels.residual_grid_min(
        centers, radii, xs, ys, zs, centers, cfg.exclusion_radius)
    fn = _Residual(centers, radii, cfg)
    p = np.array([xs[ix], ys[iy], zs[iz]])
    r = r_coarse
    if warm_start is not None:
        w = warm_start.as_array()
        rw = fn(w)
        if rw < r:
            p, r = w, rw
    if refine and math.isfinite(r):
        p, r = _refine(fn, p, r, res, cfg.refine_passes)
    return Vec3.of(p), r, r_coarse


def _solution(fmaps, point: Vec3, tx_power: float, residual: float, cfg: GwpConfig) -> GwpSolution:
    b = cfg.budget.with_power(tx_power)
    achieved = tuple(float(snr_db(b, distance(point, f.pos))) for f in fmaps)
    return GwpSolution(point, tx_power, residual,
                       tuple(float(f.target_snr_db) for f in fmaps), achieved,
                       tuple(f.id.id for f in fmaps))


def feasible_point(fmaps: Sequence[DemandedFmap], tx_power_dbm: float, cfg: GwpConfig,
                   warm_start: Vec3 | None = None) -> GwpSolution | None:
    """Deepest point of the placement subspace at ``tx_power_dbm``; ``None`` if empty."""
    p, r, _ = best_point(fmaps, tx_power_dbm, cfg, warm_start)
    if not r <= 0.0:
        return None
    return _solution(fmaps, p, tx_power_dbm, r, cfg)


def assign_targets(fmaps: Sequence[DemandedFmap], table: McsTable, sharers: int) -> list[DemandedFmap]:
    return [DemandedFmap(f.id, f.pos, f.demand_bps, min_snr_for_demand(table, f.demand_bps, sharers))
            for f in fmaps]


def gwp_algorithm(fmaps: Sequence[DemandedFmap], table: McsTable, sharers: int | None = None,
                  cfg: GwpConfig = GwpConfig(), direction: str = "uplink",
                  warm_start: Vec3 | None = None) -> GwpSolution:
    """Raise the common transmit power until the gateway has a feasible spot.

    The channel is symmetric, so ``direction`` only gets validated.
    """
    if direction not in ("uplink", "downlink"):
        raise InvalidInputError(f"direction must be uplink or downlink, got {direction!r}")
    if not fmaps:
        raise InvalidInputError("need at least one FMAP")
    sharers = len(fmaps) if sharers is None else sharers
    targeted = assign_targets(fmaps, table, sharers)
    p_t = cfg.power_start_dbm
    while p_t <= cfg.power_max_dbm + 1e-9:
        sol = feasible_point(targeted, p_t, cfg, warm_start)
        if sol is not None:
            return sol
        p_t += cfg.power_step_dbm
    raise InfeasibleDeploymentError(
        f"no gateway position up to {cfg.power_max_dbm} dBm for {len(fmaps)} FMAPs")


def gwp_over_time(trajectories: Sequence[Trajectory], demands, table: McsTable, grid: TimeGrid,
                  cfg: GwpConfig = GwpConfig(), sharers: int | None = None,
                  exclude: Sequence[int] = ()) -> list[tuple[float, GwpSolution]]:
    """Solve at every grid instant, warm-starting from the previous position.

    ``demands`` is a :class:`~aeronet.routing.TrafficDemandSet`; nodes with
    zero demand at an instant are left out of that instant's problem.
    """
    out = []
    warm = None
    skip = set(exclude)
    for t in grid.instants():
        fmaps = []
        for tr in trajectories:
            n = tr.node.id
            if n in skip:
                continue
            dem = demands.offered(n, t)
            if dem > 0:
                fmaps.append(DemandedFmap(tr.node, position_at(tr, t), dem))
        sol = gwp_algorithm(fmaps, table, sharers, cfg, warm_start=warm)
        warm = sol.gw_pos
        out.append((t, sol))
    return out


def solutions_to_ndjson(solutions: Sequence[tuple[float, GwpSolution]], header: Mapping | None = None) -> str:
    head = {"format": "aeronet-gwp", "version": 1}
    head.update(header or {})
    lines = [json.dumps(head, sort_keys=True)]
    lines += [s.to_json(t) for t, s in solutions]
    return "\n".join(lines) + "\n"
