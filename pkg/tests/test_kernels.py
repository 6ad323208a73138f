"""The numba kernels and their numpy twins must agree."""
import numpy as np
import pytest

from streamfill import _accel
from streamfill.kernels.cd import cd_gram_numba, cd_gram_numpy
from streamfill.kernels.knn import knn_rows_numba, knn_rows_numpy
from streamfill.kernels.tree import grow_tree_numba, grow_tree_numpy, node_capacity, predict_tree_numba, predict_tree_numpy


@pytest.mark.parametrize("seed", range(5))
def test_cd_parity(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((50, 7))
    y = X @ rng.standard_normal(7) + rng.standard_normal(50)
    G, c, yy = X.T @ X / 50, X.T @ y / 50, y @ y / 50
    a = cd_gram_numpy(G, c, yy, 0.05, 0.6, 1e-10, 5000)
    b = cd_gram_numba(G, c, yy, 0.05, 0.6, 1e-10, 5000)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-14)
    assert a[1] == b[1]
    np.testing.assert_allclose(a[2], b[2], rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_tree_parity(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((120, 4))
    X[:, 2] = np.round(X[:, 2] * 3)  # ties
    y = np.sin(6 * X[:, 0]) + X[:, 2] + 0.1 * rng.standard_normal(120)
    keys = rng.random((node_capacity(120, 3), 4))
    a = grow_tree_numpy(X, y, 8, 3, 2, keys)
    b = grow_tree_numba(X, y, 8, 3, 2, keys)
    # identical structure; leaf means may differ in the last ulp (pairwise vs sequential sums)
    for u, v in zip(a[:4], b[:4]):
        np.testing.assert_array_equal(u, v)
    np.testing.assert_allclose(a[4], b[4], rtol=1e-12, atol=1e-12)
    Q = rng.random((40, 4))
    np.testing.assert_allclose(predict_tree_numpy(*a, Q), predict_tree_numba(*b, Q), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_knn_parity(seed):
    rng = np.random.default_rng(seed)
    ref = np.round(rng.random((70, 5)), 1)  # ties in distance
    q = np.round(rng.random((90, 5)), 1)
    q[rng.random(q.shape) < 0.5] = np.nan
    np.testing.assert_array_equal(knn_rows_numpy(ref, q, 4), knn_rows_numba(ref, q, 4))


def test_flag_selects_implementation():
    assert _accel.select("a", "b") == ("a" if _accel.USE_NUMBA else "b")
