# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for agglomerative merging and PAM swap search.

Must stay numerically identical to ``_pykernels``: same formulas, same
operation order, same tie rules.
"""

import numpy as np
from libc.math cimport sqrt

SINGLE, COMPLETE, AVERAGE, WARD = 0, 1, 2, 3


cdef inline double _lw(int method, double dik, double djk, double dij,
                       double ni, double nj, double nk):
    cdef double v
    if method == 0:
        return dik if dik < djk else djk
    elif method == 1:
        return dik if dik > djk else djk
    elif method == 2:
        return (ni * dik + nj * djk) / (ni + nj)
    v = ((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * dij * dij) / (ni + nj + nk)
    if v < 0.0:
        v = 0.0
    return sqrt(v)


def linkage_merges(double[:, ::1] dist, int method):
    """Full merge sequence from a square distance matrix.

    Returns an ``(n - 1, 4)`` float array of ``(id_a, id_b, distance, new_id)``
    with ``id_a < id_b``; leaves are ``0..n-1``, merge ``s`` creates ``n + s``.
    Ties on distance go to the lexicographically smallest ``(id_a, id_b)``.
    """
    cdef Py_ssize_t n = dist.shape[0]
    cdef double[:, ::1] D = np.array(dist, dtype=np.float64, copy=True)
    cdef long[::1] ids = np.arange(n, dtype=np.int64)
    cdef double[::1] size = np.ones(n, dtype=np.float64)
    cdef char[::1] active = np.ones(n, dtype=np.int8)
    out = np.zeros((max(n - 1, 0), 4), dtype=np.float64)
    cdef double[:, ::1] merges = out
    cdef Py_ssize_t step, s, t, u, bs, bt
    cdef long lo, hi, blo, bhi, a_id, b_id
    cdef double v, best, dst, ni, nj

    for step in range(n - 1):
        best = 0.0
        bs = -1
        bt = -1
        blo = 0
        bhi = 0
        for s in range(n):
            if not active[s]:
                continue
            for t in range(s + 1, n):
                if not active[t]:
                    continue
                v = D[s, t]
                if ids[s] < ids[t]:
                    lo = ids[s]
                    hi = ids[t]
                else:
                    lo = ids[t]
                    hi = ids[s]
                if bs < 0 or v < best or (v == best and (lo < blo or (lo == blo and hi < bhi))):
                    best = v
                    bs = s
                    bt = t
                    blo = lo
                    bhi = hi
        dst = D[bs, bt]
        ni = size[bs]
        nj = size[bt]
        for u in range(n):
            if not active[u] or u == bs or u == bt:
                continue
            v = _lw(method, D[bs, u], D[bt, u], dst, ni, nj, size[u])
            D[bs, u] = v
            D[u, bs] = v
        merges[step, 0] = blo
        merges[step, 1] = bhi
        merges[step, 2] = dst
        merges[step, 3] = n + step
        ids[bs] = n + step
        size[bs] = ni + nj
        active[bt] = 0
    return out


def pam_swap_deltas(double[:, ::1] D, long[::1] medoids, long[::1] nearest,
                    double[::1] dnear, double[::1] dsecond):
    """Cost change of every (medoid position, candidate point) swap.

    ``nearest[j]`` is the position (into ``medoids``) of point j's closest
    medoid; ``dnear``/``dsecond`` its distances to the closest and second
    closest medoid.  Entries for candidates that are already medoids are +inf.
    """
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t k = medoids.shape[0]
    out = np.full((k, n), np.inf, dtype=np.float64)
    cdef double[:, ::1] delta = out
    cdef char[::1] is_med = np.zeros(n, dtype=np.int8)
    cdef Py_ssize_t i, h, j
    cdef double acc, dh, r
    for i in range(k):
        is_med[medoids[i]] = 1
    for i in range(k):
        for h in range(n):
            if is_med[h]:
                continue
            acc = 0.0
            for j in range(n):
                dh = D[j, h]
                if nearest[j] == i:
                    r = dh if dh < dsecond[j] else dsecond[j]
                else:
                    r = dh if dh < dnear[j] else dnear[j]
                acc += r - dnear[j]
            delta[i, h] = acc
    return out
