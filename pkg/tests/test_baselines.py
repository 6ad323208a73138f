import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import matrix
from streamfill.baselines import (
    ForestConfig,
    ForestImputer,
    RegressionTree,
    fit_forest,
    forest_impute,
    gess_lookup,
    knn_impute,
)
from streamfill.core import AlignedDataset
from streamfill.errors import InvalidConfig, NoCompleteTrainingRows


def knn_oracle(ref, query, k):
    """Brute force over Python lists."""
    mean = ref.mean(axis=0)
    sd = ref.std(axis=0)
    sd[sd == 0] = 1
    z = (ref - mean) / sd
    out = query.copy()
    for r, row in enumerate(query):
        obs = [j for j in range(len(row)) if np.isfinite(row[j])]
        if len(obs) == len(row):
            continue
        if not obs:
            out[r] = np.where(np.isfinite(row), row, mean)
            continue
        qz = [(row[j] - mean[j]) / sd[j] for j in obs]
        d = [sum((qz[a] - z[i, j]) ** 2 for a, j in enumerate(obs)) for i in range(len(ref))]
        order = sorted(range(len(ref)), key=lambda i: (d[i], i))[:k]
        for j in range(len(row)):
            if not np.isfinite(row[j]):
                out[r, j] = np.mean([ref[i, j] for i in order])
    return out


class TestKnn:
    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_brute_force(self, rng, k):
        ref = rng.random((40, 4)) * 10
        q = rng.random((25, 4)) * 10
        q[rng.random(q.shape) < 0.4] = np.nan
        q[3] = np.nan
        out = knn_impute(matrix(ref), matrix(q), k)
        np.testing.assert_allclose(out.values, knn_oracle(ref, q, k), rtol=1e-12)

    def test_incomplete_training_rows_ignored(self):
        train = matrix([[1.0, 10.0], [np.nan, 99.0], [3.0, 30.0]])
        out = knn_impute(train, matrix([[2.9, np.nan]]), k=1)
        assert out.values[0, 1] == 30.0

    def test_within_training_range(self, rng):
        ref = rng.random((30, 3))
        q = rng.random((30, 3)) * 5 - 2
        q[:, 1] = np.nan
        out = knn_impute(matrix(ref), matrix(q), 4)
        assert ref[:, 1].min() <= out.values[:, 1].min() and out.values[:, 1].max() <= ref[:, 1].max()

    def test_errors(self):
        with pytest.raises(NoCompleteTrainingRows):
            knn_impute(matrix([[1.0, np.nan]]), matrix([[1.0, np.nan]]))
        with pytest.raises(InvalidConfig):
            knn_impute(matrix([[1.0, 2.0]]), matrix([[1.0, np.nan]]), k=2)


class TestTree:
    def test_leaf(self):
        t = RegressionTree.leaf(4.0)
        assert t.depth == 0 and t.predict(np.zeros((3, 2))).tolist() == [4.0] * 3

    def test_stump_on_step(self):
        X = np.arange(20.0)[:, None]
        y = np.where(X[:, 0] < 10, 1.0, 5.0)
        model = fit_forest(matrix(np.column_stack([y, X[:, 0]])), ForestConfig(1, 1, 1, 1.0))
        tree = model.trees["S0"][0]
        assert tree.depth <= 1
        pred = model.predict_station(0, np.array([[np.nan, 2.0], [np.nan, 17.0]]))
        assert pred.tolist() == [1.0, 5.0]

    def test_min_leaf_and_depth(self, rng):
        rows = rng.random((200, 3))
        cfg = ForestConfig(5, 4, 10, 1.0)
        model = fit_forest(matrix(rows), cfg, seed=3)
        for bag in model.trees.values():
            for t in bag:
                assert t.depth <= 4
                leaves = np.flatnonzero(t.feature < 0)
                assert len(leaves) <= 200 // 10

    def test_predictions_bounded_by_targets(self, rng):
        rows = rng.random((80, 3)) * 100
        model = fit_forest(matrix(rows), ForestConfig(10, 6, 3, 0.5), seed=1)
        q = rng.random((50, 3)) * 300 - 100
        for j in range(3):
            p = model.predict_station(j, q)
            assert rows[:, j].min() - 1e-9 <= p.min() and p.max() <= rows[:, j].max() + 1e-9


class TestForest:
    def test_hand_built_two_tree_forest(self):
        stump = RegressionTree([0, -1, -1], [1.5, 0, 0], [1, -1, -1], [2, -1, -1], [0, 10.0, 20.0])
        const = RegressionTree.leaf(4.0)
        model = ForestImputer(("A", "B"), {"A": [stump, const], "B": [const, const]}, np.array([0.0, 1.0]))
        target = matrix([[np.nan, 1.0], [np.nan, 2.0], [7.0, np.nan]], ["A", "B"])
        out = forest_impute(model, target)
        assert out.values[:, 0].tolist() == [7.0, 12.0, 7.0]
        assert out.values[2, 1] == 4.0

    def test_separable_data(self, rng):
        x = rng.random(300) * 10
        rows = np.column_stack([np.where(x > 5, 100.0, 0.0), x])
        model = fit_forest(matrix(rows), ForestConfig(20, 3, 2, 1.0), seed=4)
        p = model.predict_station(0, np.array([[np.nan, 1.0], [np.nan, 9.0]]))
        assert p[0] < 5 and p[1] > 95

    def test_seeded(self, rng):
        rows = rng.random((60, 4))
        a = fit_forest(matrix(rows), ForestConfig(3, 5, 2), seed=9)
        b = fit_forest(matrix(rows), ForestConfig(3, 5, 2), seed=9)
        c = fit_forest(matrix(rows), ForestConfig(3, 5, 2), seed=10)
        sa = [t.structure() for t in a.trees["S1"]]
        assert sa == [t.structure() for t in b.trees["S1"]]
        assert sa != [t.structure() for t in c.trees["S1"]]

    def test_errors(self, rng):
        with pytest.raises(InvalidConfig):
            ForestConfig(feature_subsample=0.0)
        with pytest.raises(InvalidConfig):
            fit_forest(matrix(rng.random((10, 1))), ForestConfig(1, 2, 1))
        with pytest.raises(NoCompleteTrainingRows):
            fit_forest(matrix([[1.0, np.nan]] * 6), ForestConfig(1, 2, 5))


def test_gess_lookup_copies_forecast():
    obs = matrix([[1.0, np.nan], [np.nan, 4.0]], ["A", "B"])
    fc = matrix([[10.0, 20.0], [30.0, 40.0]], ["A", "B"])
    out = gess_lookup(AlignedDataset(obs, fc))
    assert out.values.tolist() == [[1.0, 20.0], [30.0, 4.0]]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6))
def test_baselines_fill_every_gap(seed, k):
    gen = np.random.default_rng(seed)
    train = gen.random((30, 3))
    q = gen.random((12, 3))
    q[gen.random(q.shape) < 0.5] = np.nan
    for out in (knn_impute(matrix(train), matrix(q), k),
                forest_impute(fit_forest(matrix(train), ForestConfig(2, 3, 2), seed), matrix(q))):
        assert out.mask.all()
        obs = np.isfinite(q)
        np.testing.assert_array_equal(out.values[obs], q[obs])
