"""Potential-field placement of flying access points.

Each zone of the map carries an attractive generator whose intensity grows
with its offered traffic and with its lack of coverage; each FMAP carries a
rejective generator. FMAPs are displaced along the resulting force every
update cycle and their cell range shrinks over busy zones and grows over
quiet ones.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import NodeId, Vec3
from .errors import InvalidInputError, ParseError, SchemaError

COINCIDENT_EPS = 0.1  # m, stand-in separation for coincident FMAPs


@dataclass(frozen=True)
class NetPlanConfig:
    k_afg_t: float = 1.0
    k_afg_c: float = 1.0
    k_afg_t_t: float = 1.0
    k_afg_t_min: float = 1.0
    k_rfg_t: float = 1.0
    k_rfg_c: float = 1.0
    k_fa: float = 1.0
    k_fr: float = 1.0
    k_s: float = 1.0
    k_r: float = 1.0
    t_max: float = 100e6
    r_mean: float = 20.0
    t_netplan: float = 10.0
    altitude: float = 10.0
    r_min: float = 1.0

    def __post_init__(self):
        if self.t_netplan < 1.0:
            raise InvalidInputError("t_netplan must be >= 1 s")
        if not self.r_mean > 0:
            raise InvalidInputError("r_mean must be > 0")
        if not self.t_max > 0:
            raise InvalidInputError("t_max must be > 0")
        if not self.r_min > 0:
            raise InvalidInputError("r_min must be > 0")

    def scaled_forces(self, k: float) -> "NetPlanConfig":
        return replace(self, k_fa=self.k_fa * k, k_fr=self.k_fr * k)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# Calibration profiles. Demand enters normalized by T_max (k_afg_t_t = 1/T_max)
# so generator intensities stay O(1); k_s keeps displacements within ~10 m per
# cycle on a 100 m x 100 m map.
PROFILES: dict[str, NetPlanConfig] = {
    "default": NetPlanConfig(
        k_afg_t=1.0, k_afg_c=2e-4, k_afg_t_t=1.0 / 100e6, k_afg_t_min=1.5e-3,
        k_rfg_t=2.0, k_rfg_c=1.0, k_fa=1.0, k_fr=5e4, k_s=0.012, k_r=40.0,
        t_max=100e6, r_mean=25.0, t_netplan=10.0, altitude=10.0,
    ),
}


def profile(name: str = "default", **overrides) -> NetPlanConfig:
    try:
        base = PROFILES[name]
    except KeyError:
        raise InvalidInputError(f"unknown NetPlan profile {name!r}") from None
    return replace(base, **overrides) if overrides else base


@dataclass(frozen=True, eq=False)
class ZoneGrid:
    """Square zones over ``[ox, ox+cov_x] x [oy, oy+cov_y]``.

    ``demand[ix, iy]`` is the aggregate offered throughput of zone
    ``(ix, iy)`` in bit/s.
    """

    cov_x: float
    cov_y: float
    zone_len: float
    demand: np.ndarray = None
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.zone_len > 0:
            raise InvalidInputError("zone_len must be > 0")
        nx, ny = self.cov_x / self.zone_len, self.cov_y / self.zone_len
        if abs(nx - round(nx)) > 1e-9 or abs(ny - round(ny)) > 1e-9 or round(nx) < 1 or round(ny) < 1:
            raise InvalidInputError("map sides must be positive multiples of zone_len")
        shape = (int(round(nx)), int(round(ny)))
        dem = np.zeros(shape) if self.demand is None else np.array(self.demand, dtype=float)
        if dem.shape != shape:
            raise InvalidInputError(f"demand shape {dem.shape} != zone layout {shape}")
        if np.any(dem < 0) or not np.all(np.isfinite(dem)):
            raise InvalidInputError("zone demand must be finite and >= 0")
        dem.setflags(write=False)
        object.__setattr__(self, "demand", dem)

    @property
    def shape(self) -> tuple[int, int]:
        return self.demand.shape

    @property
    def n_zones(self) -> int:
        return self.demand.size

    def centers(self) -> np.ndarray:
        """Zone centers, shape ``(Z, 2)``, in ``demand.ravel()`` order."""
        nx, ny = self.shape
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        cx = self.origin[0] + (ix.ravel() + 0.5) * self.zone_len
        cy = self.origin[1] + (iy.ravel() + 0.5) * self.zone_len
        return np.stack([cx, cy], axis=1)

    def zone_center(self, ix: int, iy: int) -> Vec3:
        return Vec3(self.origin[0] + (ix + 0.5) * self.zone_len,
                    self.origin[1] + (iy + 0.5) * self.zone_len, 0.0)

    def zone_of(self, x: float, y: float) -> tuple[int, int]:
        """Zone index containing ``(x, y)``; the far edges belong to the last zone."""
        ox, oy = self.origin
        if not (ox <= x <= ox + self.cov_x and oy <= y <= oy + self.cov_y):
            raise InvalidInputError(f"point ({x}, {y}) outside the map")
        nx, ny = self.shape
        ix = min(int((x - ox) // self.zone_len), nx - 1)
        iy = min(int((y - oy) // self.zone_len), ny - 1)
        return ix, iy

    def bounds(self) -> tuple[float, float, float, float]:
        ox, oy = self.origin
        return ox, oy, ox + self.cov_x, oy + self.cov_y

    def with_demand(self, demand) -> "ZoneGrid":
        return ZoneGrid(self.cov_x, self.cov_y, self.zone_len, demand, self.origin)

    def __eq__(self, other):
        return (isinstance(other, ZoneGrid) and self.cov_x == other.cov_x and self.cov_y == other.cov_y
                and self.zone_len == other.zone_len and self.origin == other.origin
                and np.array_equal(self.demand, other.demand))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["zone_x_index", "zone_y_index", "offered_bps"])
        nx, ny = self.shape
        for ix in range(nx):
            for iy in range(ny):
                if self.demand[ix, iy] != 0:
                    w.writerow([ix, iy, repr(float(self.demand[ix, iy]))])
        return out.getvalue()

    @classmethod
    def from_csv(cls, path, cov_x: float, cov_y: float, zone_len: float,
                 origin: tuple[float, float] = (0.0, 0.0)) -> "ZoneGrid":
        return cls.from_csv_text(Path(path).read_text(), cov_x, cov_y, zone_len, origin, path=path)

    @classmethod
    def from_csv_text(cls, text: str, cov_x: float, cov_y: float, zone_len: float,
                      origin: tuple[float, float] = (0.0, 0.0), path=None) -> "ZoneGrid":
        grid = cls(cov_x, cov_y, zone_len, None, origin)
        dem = np.zeros(grid.shape)
        header = None
        for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
            if not rec or rec[0].startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in rec]
                if header != ["zone_x_index", "zone_y_index", "offered_bps"]:
                    raise SchemaError("expected header zone_x_index,zone_y_index,offered_bps", lineno, path)
                continue
            try:
                ix, iy, v = int(rec[0]), int(rec[1]), float(rec[2])
            except (ValueError, IndexError) as exc:
                raise ParseError(str(exc) or "bad row", lineno, path) from None
            if not (0 <= ix < grid.shape[0] and 0 <= iy < grid.shape[1]):
                raise SchemaError(f"zone ({ix}, {iy}) outside the {grid.shape} layout", lineno, path)
            dem[ix, iy] = v
        if header is None:
            raise SchemaError("missing header", 1, path)
        return grid.with_demand(dem)


@dataclass(frozen=True)
class FmapState:
    id: NodeId
    pos: Vec3
    cell_range: float

    def __post_init__(self):
        if not self.cell_range > 0:
            raise InvalidInputError("cell_range must be > 0")


def coverage_margin(fmap: FmapState, zone_center: Vec3) -> float:
    return fmap.cell_range - math.hypot(fmap.pos.x - zone_center.x, fmap.pos.y - zone_center.y)


def afg_coverage(m_z: float, zone_len: float) -> float:
    if m_z <= 0:
        return 1.0
    if m_z >= zone_len:
        return 0.0
    return 1.0 - m_z / zone_len


def afg_traffic(cfg: NetPlanConfig, t_z):
    """Traffic component of a zone's attraction, demand clamped to ``[0, t_max]``."""
    return cfg.k_afg_t_t * np.clip(t_z, 0.0, cfg.t_max) + cfg.k_afg_t_min


def afg_intensity(cfg: NetPlanConfig, t_z, afg_c):
    return cfg.k_afg_t * afg_traffic(cfg, t_z) + cfg.k_afg_c * np.asarray(afg_c, dtype=float)


def _xy(fmaps: Sequence[FmapState]) -> np.ndarray:
    return np.array([[f.pos.x, f.pos.y] for f in fmaps], dtype=float).reshape(-1, 2)


def margins(grid: ZoneGrid, fmaps: Sequence[FmapState]) -> np.ndarray:
    """``m[z, u]`` for every zone and FMAP."""
    c = grid.centers()
    p = _xy(fmaps)
    d = np.hypot(c[:, None, 0] - p[None, :, 0], c[:, None, 1] - p[None, :, 1])
    r = np.array([f.cell_range for f in fmaps])
    return r[None, :] - d


def rfg_components(grid: ZoneGrid, fmap: FmapState, all_afg_t) -> tuple[float, float]:
    """``(RFG^T_u, RFG^C_u)``: covered-zone adjustment and map-wide mean."""
    afg_t = np.asarray(all_afg_t, dtype=float).ravel()
    if afg_t.size != grid.n_zones:
        raise InvalidInputError("all_afg_t must cover every zone")
    mean_all = float(afg_t.mean())
    covered = margins(grid, [fmap])[:, 0] >= 0
    if not covered.any():
        return 0.0, mean_all
    return mean_all - float(afg_t[covered].mean()), mean_all


def rfg_intensity(cfg: NetPlanConfig, grid: ZoneGrid, fmap: FmapState, all_afg_t) -> float:
    rt, rc = rfg_components(grid, fmap, all_afg_t)
    return cfg.k_rfg_t * rt + cfg.k_rfg_c * rc


def attractive_force(cfg: NetPlanConfig, afg_z: float, zone_center: Vec3, fmap_pos: Vec3) -> np.ndarray:
    v = np.array([zone_center.x - fmap_pos.x, zone_center.y - fmap_pos.y])
    # magnitude K*AFG*d along the unit vector == K*AFG*(vector)
    return cfg.k_fa * afg_z * v


def rejective_force(cfg: NetPlanConfig, rfg_i: float, pos_i: Vec3, pos_u: Vec3) -> np.ndarray:
    """Push on FMAP ``u`` directed away from FMAP ``i``."""
    v = np.array([pos_u.x - pos_i.x, pos_u.y - pos_i.y])
    d = math.hypot(v[0], v[1])
    if d < COINCIDENT_EPS:
        if d == 0:
            unit = np.array([1.0, 0.0])
        else:
            unit = v / d
        d = COINCIDENT_EPS
    else:
        unit = v / d
    return cfg.k_fr * rfg_i / d * unit


@dataclass(frozen=True)
class Fields:
    """Generator intensities for one update cycle."""

    afg: np.ndarray      # per zone
    afg_t: np.ndarray    # per zone, traffic component
    rfg: np.ndarray      # per FMAP
    rfg_t: np.ndarray    # per FMAP, adjustment component


def compute_fields(cfg: NetPlanConfig, grid: ZoneGrid, fmaps: Sequence[FmapState]) -> Fields:
    afg_t = afg_traffic(cfg, grid.demand.ravel())
    m = margins(grid, fmaps)
    m_z = m.max(axis=1)
    afg_c = np.array([afg_coverage(v, grid.zone_len) for v in m_z])
    afg = cfg.k_afg_t * afg_t + cfg.k_afg_c * afg_c
    mean_all = float(afg_t.mean())
    rfg_t = np.zeros(len(fmaps))
    for u in range(len(fmaps)):
        cov = m[:, u] >= 0
        if cov.any():
            rfg_t[u] = mean_all - float(afg_t[cov].mean())
    rfg = cfg.k_rfg_t * rfg_t + cfg.k_rfg_c * mean_all
    return Fields(afg, afg_t, rfg, rfg_t)


def net_force(cfg: NetPlanConfig, grid: ZoneGrid, fmaps: Sequence[FmapState], u: int,
              fields: Fields | None = None) -> np.ndarray:
    """Sum of every zone's pull and every other FMAP's push on FMAP ``u``."""
    f = fields or compute_fields(cfg, grid, fmaps)
    p = _xy(fmaps)
    c = grid.centers()
    total = cfg.k_fa * (f.afg[:, None] * (c - p[u])).sum(axis=0)
    for i in range(len(fmaps)):
        if i != u:
            total = total + rejective_force(cfg, float(f.rfg[i]), fmaps[i].pos, fmaps[u].pos)
    return total


def net_forces(cfg: NetPlanConfig, grid: ZoneGrid, fmaps: Sequence[FmapState]) -> np.ndarray:
    f = compute_fields(cfg, grid, fmaps)
    return np.array([net_force(cfg, grid, fmaps, u, f) for u in range(len(fmaps))]).reshape(-1, 2)


def netplan_step(cfg: NetPlanConfig, grid: ZoneGrid, fmaps: Sequence[FmapState]) -> list[FmapState]:
    """One update cycle: displace by ``K_s * F``, clamp to the map, resize cells."""
    if not fmaps:
        raise InvalidInputError("need at least one FMAP")
    f = compute_fields(cfg, grid, fmaps)
    x0, y0, x1, y1 = grid.bounds()
    out = []
    for u, fm in enumerate(fmaps):
        F = net_force(cfg, grid, fmaps, u, f)
        x = min(max(fm.pos.x + cfg.k_s * F[0], x0), x1)
        y = min(max(fm.pos.y + cfg.k_s * F[1], y0), y1)
        r = max(cfg.r_mean + cfg.k_r * float(f.rfg_t[u]), cfg.r_min)
        out.append(FmapState(fm.id, Vec3(x, y, fm.pos.z), r))
    return out


def run_netplan(cfg: NetPlanConfig, grid: ZoneGrid, fmaps: Sequence[FmapState],
                steps: int) -> list[list[FmapState]]:
    """States after each of ``steps`` cycles; element 0 is the input."""
    history = [list(fmaps)]
    for _ in range(steps):
        history.append(netplan_step(cfg, grid, history[-1]))
    return history


def initial_fmaps(positions: Sequence[tuple[float, float]], cfg: NetPlanConfig,
                  first_id: int = 1) -> list[FmapState]:
    return [FmapState(NodeId(first_id + k), Vec3(x, y, cfg.altitude), cfg.r_mean)
            for k, (x, y) in enumerate(positions)]


def served_demand(grid: ZoneGrid, fmaps: Sequence[FmapState]) -> dict[int, float]:
    """Offered load each FMAP carries: every covered zone goes to its nearest covering FMAP.

    Ties go to the lower id; uncovered zones are not served.
    """
    if not fmaps:
        return {}
    m = margins(grid, fmaps)
    c = grid.centers()
    p = _xy(fmaps)
    d = np.hypot(c[:, None, 0] - p[None, :, 0], c[:, None, 1] - p[None, :, 1])
    d = np.where(m >= 0, d, np.inf)
    order = np.argsort([f.id.id for f in fmaps], kind="stable")
    dem = np.asarray(grid.demand, dtype=float).ravel()
    out = {f.id.id: 0.0 for f in fmaps}
    for z in range(grid.n_zones):
        k = order[int(np.argmin(d[z, order]))]
        if math.isfinite(d[z, k]):
            out[fmaps[k].id.id] += float(dem[z])
    return out
