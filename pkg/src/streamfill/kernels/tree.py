"""CART regression-tree growth and traversal.

Trees are flat arrays: ``feature[i] == -1`` marks a leaf; otherwise rows with
``x[feature[i]] <= threshold[i]`` go to ``left[i]``. Nodes are numbered in
creation order and grown depth-first, left child first. The random feature
subset of node ``i`` is the ``n_sub`` smallest entries of ``keys[i]``, so both
implementations grow the same tree from the same pre-drawn keys.
"""
import numpy as np

from .._accel import njit, select


def node_capacity(n_rows, min_leaf):
    return 2 * max(1, n_rows // max(1, min_leaf)) + 1


def _threshold(a, b):
    t = 0.5 * (a + b)
    return a if t >= b else t


def grow_tree_numpy(X, y, max_depth, min_leaf, n_sub, keys):
    n, p = X.shape
    cap = keys.shape[0]
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    order = np.arange(n)
    stack = [(0, 0, n, 0)]
    n_nodes = 1
    while stack:
        node, start, end, depth = stack.pop()
        rows = order[start:end]
        yn = y[rows]
        m = end - start
        mu = yn.sum() / m
        value[node] = mu
        if depth >= max_depth or m < 2 * min_leaf or m < 2 or n_nodes + 2 > cap:
            continue
        yc = yn - mu
        parent = (yc * yc).sum() - yc.sum() ** 2 / m
        if parent <= 0.0:
            continue
        feats = np.argsort(keys[node], kind="mergesort")[:n_sub]
        best, best_f, best_i, best_perm = np.inf, -1, -1, None
        nl = np.arange(1, m)
        for f in feats:
            perm = np.argsort(X[rows, f], kind="mergesort")
            xs = X[rows[perm], f]
            ys = yc[perm]
            s1 = np.cumsum(ys)
            s2 = np.cumsum(ys * ys)
            s1l, s2l = s1[:-1], s2[:-1]
            s1r, s2r = s1[-1] - s1l, s2[-1] - s2l
            nr = m - nl
            sse = (s2l - s1l * s1l / nl) + (s2r - s1r * s1r / nr)
            ok = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
            if not ok.any():
                continue
            sse = np.where(ok, sse, np.inf)
            i = int(np.argmin(sse))
            if sse[i] < best:
                best, best_f, best_i, best_perm = sse[i], int(f), i + 1, perm
        if best_f < 0 or not best < parent - 1e-12 * parent:
            continue
        xs = X[rows[best_perm], best_f]
        feature[node] = best_f
        threshold[node] = _threshold(xs[best_i - 1], xs[best_i])
        order[start:end] = rows[best_perm]
        left[node], right[node] = n_nodes, n_nodes + 1
        n_nodes += 2
        stack.append((right[node], start + best_i, end, depth + 1))
        stack.append((left[node], start, start + best_i, depth + 1))
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@njit
def grow_tree_numba(X, y, max_depth, min_leaf, n_sub, keys):
    n, p = X.shape
    cap = keys.shape[0]
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    order = np.arange(n)
    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, n, 0
    top = 1
    n_nodes = 1
    xs = np.empty(n)
    ys = np.empty(n)
    while top > 0:
        top -= 1
        node, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        m = end - start
        rows = order[start:end].copy()
        tot = 0.0
        for r in range(m):
            tot += y[rows[r]]
        mu = tot / m
        value[node] = mu
        if depth >= max_depth or m < 2 * min_leaf or m < 2 or n_nodes + 2 > cap:
            continue
        sy = 0.0
        syy = 0.0
        for r in range(m):
            d = y[rows[r]] - mu
            sy += d
            syy += d * d
        parent = syy - sy * sy / m
        if parent <= 0.0:
            continue
        feats = np.argsort(keys[node], kind="mergesort")[:n_sub]
        best = np.inf
        best_f = -1
        best_i = -1
        best_perm = np.arange(m)
        for fi in range(feats.shape[0]):
            f = feats[fi]
            col = np.empty(m)
            for r in range(m):
                col[r] = X[rows[r], f]
            perm = np.argsort(col, kind="mergesort")
            for r in range(m):
                xs[r] = col[perm[r]]
                ys[r] = y[rows[perm[r]]] - mu
            s1 = 0.0
            s2 = 0.0
            f_best = np.inf
            f_i = -1
            for i in range(m - 1):
                s1 += ys[i]
                s2 += ys[i] * ys[i]
                nl = i + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf or not xs[i] < xs[i + 1]:
                    continue
                s1r = sy - s1
                s2r = syy - s2
                sse = (s2 - s1 * s1 / nl) + (s2r - s1r * s1r / nr)
                if sse < f_best:
                    f_best = sse
                    f_i = i
            if f_i >= 0 and f_best < best:
                best = f_best
                best_f = f
                best_i = f_i + 1
                best_perm = perm.copy()
        if best_f < 0 or not best < parent - 1e-12 * parent:
            continue
        a = X[rows[best_perm[best_i - 1]], best_f]
        b = X[rows[best_perm[best_i]], best_f]
        t = 0.5 * (a + b)
        if t >= b:
            t = a
        feature[node] = best_f
        threshold[node] = t
        for r in range(m):
            order[start + r] = rows[best_perm[r]]
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        st_node[top], st_start[top], st_end[top], st_depth[top] = right[node], start + best_i, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = left[node], start, start + best_i, depth + 1
        top += 1
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


def predict_tree_numpy(feature, threshold, left, right, value, X):
    node = np.zeros(len(X), dtype=np.int64)
    rows = np.arange(len(X))
    active = feature[node] >= 0
    while active.any():
        idx = rows[active]
        nd = node[idx]
        go_left = X[idx, feature[nd]] <= threshold[nd]
        node[idx] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return value[node]


@njit
def predict_tree_numba(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


grow_tree = select(grow_tree_numba, grow_tree_numpy)
predict_tree = select(predict_tree_numba, predict_tree_numpy)
