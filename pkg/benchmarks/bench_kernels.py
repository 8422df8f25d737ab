"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per kernel and backend, and checks that both
backends return identical results on every input.
"""
import argparse
import time

import numpy as np

from aeronet import kernels
from aeronet.channel import LinkBudget
from aeronet.core import Vec3
from aeronet.gwp import _axis
from aeronet.routing import I2R, RoutingMetric, build_snapshot, edge_weights


def _graphs(n_graphs, n_nodes, seed=0):
    rng = np.random.default_rng(seed)
    b = LinkBudget()
    out = []
    for _ in range(n_graphs):
        pts = rng.uniform(0, 120, size=(n_nodes, 3))
        snap = build_snapshot({i: Vec3.of(p) for i, p in enumerate(pts)}, b)
        w = edge_weights(RoutingMetric(I2R, 0.5), snap, set(range(0, n_nodes, 3)))
        out.append(np.ascontiguousarray(w))
    return out


def bench_dijkstra(impl, graphs):
    res = []
    for w in graphs:
        for dst in range(1, min(8, w.shape[0])):
            res.append(impl.dijkstra_dense(w, 0, dst))
    return res


def bench_residual(impl, cases):
    return [impl.residual_grid_min(*c) for c in cases]


def _residual_cases(n, seed=1):
    rng = np.random.default_rng(seed)
    xs, ys, zs = _axis(80, 1.0), _axis(80, 1.0), _axis(20, 1.0)
    out = []
    for _ in range(n):
        c = rng.uniform([0, 0, 0], [80, 80, 20], size=(6, 3))
        r = rng.uniform(20, 60, size=6)
        out.append((c, r, xs, ys, zs, c, 0.5))
    return out


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        print("compiled kernels not built; only the Python backend is available")
        return
    graphs = _graphs(60, 40)
    cases = _residual_cases(10)
    rows = [
        ("dijkstra_dense (60 graphs x 7 targets, n=40)", bench_dijkstra, graphs),
        ("residual_grid_min (10 solves, 81x81x21 grid)", bench_residual, cases),
    ]
    print(f"{'kernel':48s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  same")
    for name, fn, data in rows:
        tp, rp = best_of(lambda: fn(kernels.python_backend, data), args.repeat)
        tc, rc = best_of(lambda: fn(kernels.compiled_backend, data), args.repeat)
        same = repr(rp) == repr(rc)
        print(f"{name:48s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}x  {same}")


if __name__ == "__main__":
    main()
