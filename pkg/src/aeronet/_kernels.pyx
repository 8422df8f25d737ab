# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. See ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline int _lex_less_ext(int* a, int la, int v, int* b, int lb) noexcept nogil:
    # is (a + [v]) < b ?
    cdef int i, n = la + 1
    cdef int m = n if n < lb else lb
    cdef int x
    for i in range(m):
        x = a[i] if i < la else v
        if x != b[i]:
            return x < b[i]
    return n < lb


cdef inline int _lex_less(int* a, int la, int* b, int lb) noexcept nogil:
    cdef int i
    cdef int m = la if la < lb else lb
    for i in range(m):
        if a[i] != b[i]:
            return a[i] < b[i]
    return la < lb


def dijkstra_dense(w, int src, int dst):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, ::1] wv = W
    cdef int n = W.shape[0]
    cdef double* dist = <double*> malloc(n * sizeof(double))
    cdef int* paths = <int*> malloc(n * n * sizeof(int))
    cdef int* plen = <int*> malloc(n * sizeof(int))
    cdef char* done = <char*> malloc(n * sizeof(char))
    cdef int u, v, i, found = 0
    cdef double nd, wt, cost = INFINITY
    try:
        with nogil:
            for v in range(n):
                dist[v] = INFINITY
                plen[v] = 0
                done[v] = 0
            dist[src] = 0.0
            paths[src * n] = src
            plen[src] = 1
            while True:
                u = -1
                for v in range(n):
                    if done[v] or dist[v] == INFINITY:
                        continue
                    if u < 0 or dist[v] < dist[u] or (
                        dist[v] == dist[u]
                        and _lex_less(&paths[v * n], plen[v], &paths[u * n], plen[u])
                    ):
                        u = v
                if u < 0:
                    break
                done[u] = 1
                if u == dst:
                    found = 1
                    cost = dist[u]
                    break
                for v in range(n):
                    wt = wv[u, v]
                    if done[v] or wt == INFINITY or v == u:
                        continue
                    nd = dist[u] + wt
                    if nd < dist[v] or (
                        nd == dist[v]
                        and _lex_less_ext(&paths[u * n], plen[u], v, &paths[v * n], plen[v])
                    ):
                        dist[v] = nd
                        for i in range(plen[u]):
                            paths[v * n + i] = paths[u * n + i]
                        paths[v * n + plen[u]] = v
                        plen[v] = plen[u] + 1
        if not found:
            return float("inf"), None
        return cost, [paths[dst * n + i] for i in range(plen[dst])]
    finally:
        free(dist)
        free(paths)
        free(plen)
        free(done)


def residual_grid_min(centers, radii, xs, ys, zs, excl_centers, double excl_radius):
    cdef double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 3)
    cdef double[::1] R = np.ascontiguousarray(radii, dtype=np.float64)
    cdef double[:, ::1] E = np.ascontiguousarray(excl_centers, dtype=np.float64).reshape(-1, 3)
    cdef double[::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] Y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef double[::1] Z = np.ascontiguousarray(zs, dtype=np.float64)
    cdef Py_ssize_t nc = C.shape[0], ne = E.shape[0]
    cdef Py_ssize_t ix, iy, iz, k
    cdef Py_ssize_t bx = 0, by = 0, bz = 0
    cdef double best = INFINITY, res, dx, dy, dz, d, ex2 = excl_radius * excl_radius
    cdef int skip
    with nogil:
        for ix in range(X.shape[0]):
            for iy in range(Y.shape[0]):
                for iz in range(Z.shape[0]):
                    skip = 0
                    for k in range(ne):
                        dx = X[ix] - E[k, 0]
                        dy = Y[iy] - E[k, 1]
                        dz = Z[iz] - E[k, 2]
                        if dx * dx + dy * dy + dz * dz < ex2:
                            skip = 1
                            break
                    if skip:
                        continue
                    res = -INFINITY
                    for k in range(nc):
                        dx = X[ix] - C[k, 0]
                        dy = Y[iy] - C[k, 1]
                        dz = Z[iz] - C[k, 2]
                        d = sqrt(dx * dx + dy * dy + dz * dz) - R[k]
                        if d > res:
                            res = d
                    if res < best:
                        best = res
                        bx = ix
                        by = iy
                        bz = iz
    return best, bx, by, bz
