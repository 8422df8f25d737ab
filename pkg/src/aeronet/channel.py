"""Free-space link budget, SNR gating, Shannon capacity and MCS lookup.

Powers and SNRs are in dB(m) throughout:
``snr_db = K + P_T - 20 log10(d)`` with the budget constant
``K = -20 log10(4 pi / c) - 20 log10(f) - N``.
"""
from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InfeasibleDemandError, InvalidInputError, ParseError, SchemaError

SPEED_OF_LIGHT = 3.0e8  # m/s, rounded as in the log-scale budget constant


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 0.0
    freq_hz: float = 5250e6
    bandwidth_hz: float = 160e6
    noise_dbm: float = -85.0
    snr_threshold_db: float = 5.0
    # Rician K-factors (uplink / downlink). Kept for documentation only; no
    # computation reads them.
    k_u_db: float | None = None
    k_d_db: float | None = None

    def __post_init__(self):
        if not self.freq_hz > 0:
            raise InvalidInputError("freq_hz must be > 0")
        if not self.bandwidth_hz > 0:
            raise InvalidInputError("bandwidth_hz must be > 0")
        if not math.isfinite(self.snr_threshold_db):
            raise InvalidInputError("snr_threshold_db must be finite")

    @property
    def budget_constant_db(self) -> float:
        return budget_constant_db(self.freq_hz, self.noise_dbm)

    @property
    def snr_threshold_linear(self) -> float:
        return 10.0 ** (self.snr_threshold_db / 10.0)

    def with_power(self, tx_power_dbm: float) -> "LinkBudget":
        return LinkBudget(tx_power_dbm, self.freq_hz, self.bandwidth_hz, self.noise_dbm,
                          self.snr_threshold_db, self.k_u_db, self.k_d_db)

    def to_dict(self) -> dict:
        return {
            "tx_power_dbm": self.tx_power_dbm,
            "freq_hz": self.freq_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "noise_dbm": self.noise_dbm,
            "snr_threshold_db": self.snr_threshold_db,
            "k_u_db": self.k_u_db,
            "k_d_db": self.k_d_db,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkBudget":
        known = {k: d[k] for k in cls().to_dict() if k in d}
        return cls(**known)


def budget_constant_db(freq_hz: float = 5250e6, noise_dbm: float = -85.0) -> float:
    """SNR in dB at 1 m for a 0 dBm transmitter."""
    return (-20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)
            - 20.0 * math.log10(freq_hz) - noise_dbm)


def _check_distance(d):
    if np.any(np.asarray(d) <= 0):
        raise InvalidInputError(f"distance must be > 0 (got {d!r})")


def rx_power_dbm(cfg: LinkBudget, d):
    """Received power at distance ``d`` (scalar or array) under Friis."""
    _check_distance(d)
    if isinstance(d, np.ndarray):
        return cfg.tx_power_dbm + 20.0 * np.log10(SPEED_OF_LIGHT / (4.0 * math.pi * d * cfg.freq_hz))
    return cfg.tx_power_dbm + 20.0 * math.log10(SPEED_OF_LIGHT / (4.0 * math.pi * d * cfg.freq_hz))


def snr_db(cfg: LinkBudget, d):
    return rx_power_dbm(cfg, d) - cfg.noise_dbm


def distance_for_snr(cfg: LinkBudget, target_snr_db: float) -> float:
    """Distance at which ``snr_db`` equals ``target_snr_db``."""
    return 10.0 ** ((cfg.budget_constant_db + cfg.tx_power_dbm - target_snr_db) / 20.0)


def distance_for_rx_power(cfg: LinkBudget, rx_dbm: float) -> float:
    return distance_for_snr(cfg, rx_dbm - cfg.noise_dbm)


def link_available(cfg: LinkBudget, d: float) -> bool:
    # strict: a link at exactly the threshold does not exist
    return bool(snr_db(cfg, d) > cfg.snr_threshold_db)


def shannon_from_snr_db(bandwidth_hz: float, snr):
    return bandwidth_hz * np.log2(1.0 + 10.0 ** (np.asarray(snr, dtype=float) / 10.0))


def shannon_capacity_bps(cfg: LinkBudget, d):
    c = shannon_from_snr_db(cfg.bandwidth_hz, snr_db(cfg, d))
    return float(c) if np.ndim(c) == 0 else c


class McsTable:
    """Ordered SNR threshold -> PHY rate mapping."""

    HEADER = ("min_snr_db", "phy_rate_bps")

    def __init__(self, rows: Iterable[tuple[float, float]]):
        rows = tuple((float(s), float(r)) for s, r in rows)
        if not rows:
            raise InvalidInputError("MCS table must have at least one row")
        for (s0, r0), (s1, r1) in zip(rows, rows[1:]):
            if not (s1 > s0 and r1 > r0):
                raise InvalidInputError("MCS rows must be strictly increasing in SNR and rate")
        self.rows = rows
        self._snrs = [s for s, _ in rows]

    def __eq__(self, other):
        return isinstance(other, McsTable) and self.rows == other.rows

    def __repr__(self):
        return f"McsTable({list(self.rows)!r})"

    def __len__(self):
        return len(self.rows)

    @property
    def top_rate(self) -> float:
        return self.rows[-1][1]

    @classmethod
    def default(cls) -> "McsTable":
        # 802.11ac, 1 spatial stream, 160 MHz, 800 ns GI (extract)
        return cls([(12.0, 58.5e6), (20.0, 234e6), (35.0, 702e6), (37.0, 780e6)])

    @classmethod
    def from_csv(cls, path) -> "McsTable":
        text = Path(path).read_text()
        return cls.from_csv_text(text, path=path)

    @classmethod
    def from_csv_text(cls, text: str, path=None) -> "McsTable":
        reader = csv.reader(io.StringIO(text))
        rows = []
        header = None
        for lineno, rec in enumerate(reader, start=1):
            if not rec or rec[0].startswith("#"):
                continue
            if header is None:
                header = tuple(c.strip() for c in rec)
                if header != cls.HEADER:
                    raise SchemaError(f"expected header {','.join(cls.HEADER)}", lineno, path)
                continue
            if len(rec) != 2:
                raise ParseError("expected 2 columns", lineno, path)
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError as exc:
                raise ParseError(str(exc), lineno, path) from None
        if header is None:
            raise SchemaError("missing header", 1, path)
        try:
            return cls(rows)
        except InvalidInputError as exc:
            raise SchemaError(str(exc), None, path) from None

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(self.HEADER)
        for s, r in self.rows:
            w.writerow([repr(s), repr(r)])
        return out.getvalue()


def mcs_rate_for_snr(table: McsTable, snr: float) -> float:
    """Highest PHY rate whose threshold is met; 0 below the table."""
    k = bisect.bisect_right(table._snrs, snr)
    return 0.0 if k == 0 else table.rows[k - 1][1]


def min_snr_for_demand(table: McsTable, demand_bps: float, sharers: int = 1) -> float:
    """Lowest tabulated SNR whose per-sharer rate carries ``demand_bps``."""
    if sharers < 1:
        raise InvalidInputError("sharers must be >= 1")
    if demand_bps < 0:
        raise InvalidInputError("demand must be >= 0")
    for s, r in table.rows:
        if r / sharers >= demand_bps:
            return s
    raise InfeasibleDemandError(
        f"demand {demand_bps:.6g} bit/s exceeds top rate {table.top_rate:.6g}/{sharers}"
    )
