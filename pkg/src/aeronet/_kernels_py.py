"""Pure-Python/numpy implementations of the hot kernels.

Semantics must match ``_kernels.pyx`` bit for bit; tests compare the two.
"""
from __future__ import annotations

import math

import numpy as np

INF = math.inf


def dijkstra_dense(w, src: int, dst: int):
    """Shortest path on a dense weight matrix (``inf`` = no edge).

    Among equal-cost paths the lexicographically smallest node sequence
    wins. Costs accumulate from the source forward. Returns
    ``(cost, path)`` or ``(inf, None)`` when ``dst`` is unreachable.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    rows = w.tolist()
    dist = [INF] * n
    path: list[list[int] | None] = [None] * n
    done = [False] * n
    dist[src] = 0.0
    path[src] = [src]
    while True:
        u = -1
        for v in range(n):
            if done[v] or dist[v] == INF:
                continue
            if u < 0 or dist[v] < dist[u] or (dist[v] == dist[u] and path[v] < path[u]):
                u = v
        if u < 0:
            return INF, None
        done[u] = True
        if u == dst:
            return dist[u], path[u]
        du, pu, row = dist[u], path[u], rows[u]
        for v in range(n):
            wv = row[v]
            if done[v] or wv == INF or v == u:
                continue
            nd = du + wv
            if nd < dist[v] or (nd == dist[v] and pu + [v] < path[v]):
                dist[v] = nd
                path[v] = pu + [v]


def residual_grid_min(centers, radii, xs, ys, zs, excl_centers, excl_radius: float):
    """Scan the grid ``xs x ys x zs`` for the minimum of
    ``max_i(|p - c_i| - r_i)``.

    Points within ``excl_radius`` of any ``excl_centers`` row are skipped.
    Returns ``(residual, ix, iy, iz)``; the first minimum in C order wins.
    ``residual`` is ``inf`` when every point is excluded.
    """
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    excl = np.asarray(excl_centers, dtype=float).reshape(-1, 3)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    zs = np.asarray(zs, dtype=float)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    res = np.full(X.shape, -INF)
    for (cx, cy, cz), r in zip(centers, radii):
        dx = X - cx
        dy = Y - cy
        dz = Z - cz
        np.maximum(res, np.sqrt(dx * dx + dy * dy + dz * dz) - r, out=res)
    ex2 = excl_radius * excl_radius
    for cx, cy, cz in excl:
        dx = X - cx
        dy = Y - cy
        dz = Z - cz
        res[dx * dx + dy * dy + dz * dz < ex2] = INF
    k = int(np.argmin(res))
    ix, iy, iz = np.unravel_index(k, res.shape)
    return float(res.flat[k]), int(ix), int(iy), int(iz)
