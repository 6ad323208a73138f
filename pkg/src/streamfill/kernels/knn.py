"""Nearest-neighbour fills over partially observed query rows.

For every query row, distances to the reference rows use only the row's
observed coordinates. The k nearest reference rows (stable order, so ties go
to the earlier row) are averaged coordinate-wise. Rows with no observed
coordinate get NaN; the caller substitutes its fallback.
"""
import numpy as np

from .._accel import njit, select


def knn_rows_numpy(ref, query, k, chunk=64):
    out = np.full(query.shape, np.nan)
    for lo in range(0, len(query), chunk):
        q = query[lo:lo + chunk]
        m = np.isfinite(q)
        diff = np.where(m[:, None, :], q[:, None, :] - ref[None, :, :], 0.0)
        d2 = (diff * diff).sum(axis=2)
        nn = np.argsort(d2, axis=1, kind="mergesort")[:, :k]
        fill = ref[nn].mean(axis=1)
        has = m.any(axis=1)
        out[lo:lo + chunk][has] = fill[has]
    return out


@njit
def knn_rows_numba(ref, query, k, chunk=64):
    n, d = ref.shape
    out = np.full(query.shape, np.nan)
    dist = np.empty(n)
    for r in range(query.shape[0]):
        any_obs = False
        for j in range(d):
            if np.isfinite(query[r, j]):
                any_obs = True
                break
        if not any_obs:
            continue
        for i in range(n):
            acc = 0.0
            for j in range(d):
                q = query[r, j]
                if np.isfinite(q):
                    diff = q - ref[i, j]
                    acc += diff * diff
            dist[i] = acc
        nn = np.argsort(dist, kind="mergesort")[:k]
        for j in range(d):
            s = 0.0
            for i in nn:
                s += ref[i, j]
            out[r, j] = s / k
    return out


knn_rows = select(knn_rows_numba, knn_rows_numpy)
