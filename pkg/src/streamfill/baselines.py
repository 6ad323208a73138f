"""Complete-data imputation baselines and the raw forecast lookup.

KNN and the random forest see in-situ observations only: they regress a
station on the other stations' same-day values, learned from training rows
where every station is observed. Neither accepts a forecast matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AlignedDataset, SeriesMatrix, derive_seed, fill_missing, make_rng
from .errors import InvalidConfig, NoCompleteTrainingRows
from .kernels.knn import knn_rows
from .kernels.tree import grow_tree, node_capacity, predict_tree


def _complete_rows(sm: SeriesMatrix) -> np.ndarray:
    return sm.values[sm.mask.all(axis=1)]


def _standardizer(rows):
    mean = rows.mean(axis=0)
    scale = rows.std(axis=0)
    return mean, np.where(scale > 0, scale, 1.0)


def knn_impute(train_obs: SeriesMatrix, target: SeriesMatrix, k: int = 5) -> SeriesMatrix:
    """Fill each missing cell from the ``k`` nearest complete training rows.

    Distance is Euclidean on z-scored values over the stations observed in
    the target row. A row with nothing observed falls back to training means.
    """
    ref = _complete_rows(train_obs)
    if len(ref) == 0:
        raise NoCompleteTrainingRows("no fully observed training rows")
    if not 1 <= k <= len(ref):
        raise InvalidConfig(f"k={k} outside [1, {len(ref)}]")
    mean, scale = _standardizer(ref)
    refz = (ref - mean) / scale
    rows = np.flatnonzero(~target.mask.all(axis=1))
    est = np.full(target.shape, np.nan)
    if len(rows):
        q = np.where(target.mask[rows], (target.values[rows] - mean) / scale, np.nan)
        fill = knn_rows(np.ascontiguousarray(refz), np.ascontiguousarray(q), int(k))
        fill = mean + scale * fill
        empty = ~target.mask[rows].any(axis=1)
        fill[empty] = mean
        est[rows] = fill
    return fill_missing(target, est)


@dataclass(frozen=True, eq=False)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        for name, dt in (("feature", np.int64), ("left", np.int64), ("right", np.int64),
                         ("threshold", np.float64), ("value", np.float64)):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=dt))

    @classmethod
    def leaf(cls, value: float) -> "RegressionTree":
        return cls([-1], [0.0], [-1], [-1], [value])

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)

    def structure(self) -> tuple:
        return tuple(map(tuple, (self.feature, self.threshold, self.left, self.right, self.value)))


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 5
    feature_subsample: float = 1.0 / 3.0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 0 or self.min_samples_leaf < 1:
            raise InvalidConfig(f"invalid forest config {self}")
        if not 0 < self.feature_subsample <= 1:
            raise InvalidConfig("feature_subsample must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class ForestImputer:
    """Per target station, a bag of trees over the other stations' values."""

    stations: tuple
    trees: dict
    feature_means: np.ndarray
    config: ForestConfig = field(default_factory=ForestConfig)
    seed: int = 0

    def features_for(self, j: int) -> np.ndarray:
        return np.array([i for i in range(len(self.stations)) if i != j], dtype=np.int64)

    def predict_station(self, j: int, X) -> np.ndarray:
        """Mean tree prediction for station ``j`` from full rows ``X`` (NaN = unavailable)."""
        X = np.asarray(X, dtype=np.float64)
        X = np.where(np.isfinite(X), X, self.feature_means)
        feats = X[:, self.features_for(j)]
        preds = [t.predict(feats) for t in self.trees[self.stations[j]]]
        return np.mean(preds, axis=0)


def fit_forest(train_obs: SeriesMatrix, config: ForestConfig = ForestConfig(), seed: int = 0) -> ForestImputer:
    """Grow ``config.n_trees`` bootstrap CART trees per station.

    Tree ``i`` of station ``j`` draws its bootstrap sample and split-feature
    keys from ``derive_seed(seed, j, i)``, so results do not depend on the
    order trees are grown in.
    """
    rows = _complete_rows(train_obs)
    if len(rows) < max(config.min_samples_leaf, 1):
        raise NoCompleteTrainingRows(f"{len(rows)} fully observed training rows")
    n, S = rows.shape
    if S < 2:
        raise InvalidConfig("a forest baseline needs at least two stations")
    p = S - 1
    n_sub = max(1, int(round(config.feature_subsample * p)))
    cap = node_capacity(n, config.min_samples_leaf)
    trees = {}
    for j, station in enumerate(train_obs.stations):
        X = np.ascontiguousarray(np.delete(rows, j, axis=1))
        y = np.ascontiguousarray(rows[:, j])
        bag = []
        for i in range(config.n_trees):
            rng = make_rng(derive_seed(seed, j, i))
            boot = rng.integers(0, n, size=n)
            keys = rng.random((cap, p))
            arrays = grow_tree(
                np.ascontiguousarray(X[boot]), np.ascontiguousarray(y[boot]),
                config.max_depth, config.min_samples_leaf, n_sub, keys,
            )
            bag.append(RegressionTree(*arrays))
        trees[station] = bag
    return ForestImputer(train_obs.stations, trees, rows.mean(axis=0), config, seed)


def forest_impute(model: ForestImputer, target: SeriesMatrix) -> SeriesMatrix:
    est = np.full(target.shape, np.nan)
    for j in range(len(model.stations)):
        miss = np.flatnonzero(~target.mask[:, j])
        if len(miss):
            est[miss, j] = model.predict_station(j, target.values[miss])
    return fill_missing(target, est)


def gess_lookup(ds: AlignedDataset) -> SeriesMatrix:
    """Fill missing cells with the co-located forecast value verbatim."""
    return fill_missing(ds.observed, ds.forecast.values)
