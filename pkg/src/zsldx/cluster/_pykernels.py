"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same formulas and tie rules.  ``linkage_merges`` is bit-identical to the
compiled version; ``pam_swap_deltas`` may differ in the last ulp because
numpy reduces sums pairwise rather than sequentially.
"""

import numpy as np

SINGLE, COMPLETE, AVERAGE, WARD = 0, 1, 2, 3


def _lw(method, dik, djk, dij, ni, nj, nk):
    if method == SINGLE:
        return np.minimum(dik, djk)
    if method == COMPLETE:
        return np.maximum(dik, djk)
    if method == AVERAGE:
        return (ni * dik + nj * djk) / (ni + nj)
    v = ((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * dij * dij) / (ni + nj + nk)
    return np.sqrt(np.maximum(v, 0.0))


def linkage_merges(dist, method):
    D = np.array(dist, dtype=np.float64, copy=True)
    n = D.shape[0]
    ids = np.arange(n, dtype=np.int64)
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges = np.zeros((max(n - 1, 0), 4))
    iu, ju = np.triu_indices(n, k=1)

    for step in range(n - 1):
        keep = active[iu] & active[ju]
        s_all, t_all = iu[keep], ju[keep]
        vals = D[s_all, t_all]
        best = vals.min()
        hit = np.flatnonzero(vals == best)
        lo = np.minimum(ids[s_all[hit]], ids[t_all[hit]])
        hi = np.maximum(ids[s_all[hit]], ids[t_all[hit]])
        pick = hit[np.lexsort((hi, lo))[0]]
        bs, bt = s_all[pick], t_all[pick]
        a_id, b_id = sorted((ids[bs], ids[bt]))

        dst = D[bs, bt]
        ni, nj = size[bs], size[bt]
        others = np.flatnonzero(active)
        others = others[(others != bs) & (others != bt)]
        v = _lw(method, D[bs, others], D[bt, others], dst, ni, nj, size[others])
        D[bs, others] = v
        D[others, bs] = v

        merges[step] = (a_id, b_id, dst, n + step)
        ids[bs] = n + step
        size[bs] = ni + nj
        active[bt] = False
    return merges


def pam_swap_deltas(D, medoids, nearest, dnear, dsecond):
    n = D.shape[0]
    k = len(medoids)
    out = np.full((k, n), np.inf)
    cand = np.setdiff1d(np.arange(n), medoids)
    Dh = D[:, cand]  # rows: points j, cols: candidates h
    for i in range(k):
        mine = (nearest == i)[:, None]
        fallback = np.where(mine, dsecond[:, None], dnear[:, None])
        r = np.minimum(Dh, fallback)
        out[i, cand] = (r - dnear[:, None]).sum(axis=0)
    return out
