"""Empirical distributions and percentile tables for simulation output."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError

PERCENTILES = (25, 50, 75, 90)


@dataclass(frozen=True)
class DistributionReport:
    samples: tuple[float, ...]
    percentiles: dict[int, float]

    def cdf(self, x: float) -> float:
        """Fraction of samples ``<= x``."""
        return float(np.searchsorted(self.samples, x, side="right")) / len(self.samples)

    def ccdf(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def curve(self) -> list[tuple[float, float, float]]:
        """``(x, cdf, ccdf)`` at every distinct sample value."""
        xs = sorted(set(self.samples))
        return [(x, self.cdf(x), self.ccdf(x)) for x in xs]

    def percentile_csv(self, header_comment: str | None = None) -> str:
        out = io.StringIO()
        if header_comment:
            out.write(f"# {header_comment}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["percentile", "value"])
        for q, v in self.percentiles.items():
            w.writerow([q, repr(v)])
        return out.getvalue()

    def curve_csv(self, header_comment: str | None = None) -> str:
        out = io.StringIO()
        if header_comment:
            out.write(f"# {header_comment}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["x", "cdf", "ccdf"])
        for x, c, cc in self.curve():
            w.writerow([repr(x), repr(c), repr(cc)])
        return out.getvalue()


def percentile(sorted_samples: Sequence[float], q: float) -> float:
    """Linear interpolation between the closest order statistics."""
    n = len(sorted_samples)
    if n == 0:
        raise InvalidInputError("no samples")
    if not 0 <= q <= 100:
        raise InvalidInputError("percentile rank must be in [0, 100]")
    pos = (n - 1) * q / 100.0
    lo = math.floor(pos)
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    a, b = sorted_samples[lo], sorted_samples[hi]
    return a if frac == 0 or a == b else a + frac * (b - a)


def compute_distribution(samples: Iterable[float], ranks: Sequence[int] = PERCENTILES) -> DistributionReport:
    xs = sorted(float(v) for v in samples)
    if not xs:
        raise InvalidInputError("compute_distribution needs at least one sample")
    if any(math.isnan(v) for v in xs):
        raise InvalidInputError("samples contain NaN")
    return DistributionReport(tuple(xs), {int(q): percentile(xs, q) for q in ranks})


def gain_table(runs: Mapping[str, DistributionReport], baseline: str) -> list[dict]:
    """Per-percentile relative gain of every run over ``baseline``."""
    if baseline not in runs:
        raise InvalidInputError(f"unknown baseline run {baseline!r}")
    base = runs[baseline]
    rows = []
    for name, rep in runs.items():
        if name == baseline:
            continue
        for q, v in rep.percentiles.items():
            b = base.percentiles.get(q)
            gain = None if not b else (v - b) / b
            rows.append({"run": name, "baseline": baseline, "percentile": q, "value": v,
                         "baseline_value": b, "gain": gain})
    return rows
