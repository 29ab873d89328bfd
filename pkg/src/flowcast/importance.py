"""Regression forest used to rank covariates and as a comparison baseline.

Trees are CART regressors grown on bootstrap samples, choosing at every node
the split with the largest reduction in squared error among a random subset
of features. A feature's importance is the total squared-error reduction of
the nodes that split on it, summed over all trees and normalized to 1.

Growing is delegated to scikit-learn; each fitted tree is copied into the
flat ``Tree`` arrays below, which own prediction and importances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from ._parallel import ordered_map
from .errors import DataError

LEAF = -1
_SK_LEAF = -1  # sklearn children_left marker


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 5
    features_per_split: int | None = None  # None -> ceil(m / 3)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise DataError("n_trees must be at least 1")
        if self.min_samples_leaf < 1:
            raise DataError("min_samples_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise DataError("max_depth must be positive or None")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise DataError("features_per_split must be positive or None")

    def resolved_features(self, m: int) -> int:
        k = self.features_per_split or math.ceil(m / 3)
        if k > m:
            raise DataError(f"features_per_split={k} exceeds the {m} candidate features")
        return k


@dataclass(frozen=True)
class Tree:
    """Flat binary tree; node 0 is the root.

    Rows with ``x[feature] <= threshold`` go left. Leaves have
    ``feature == -1`` and predict ``value``. ``gain`` is the squared-error
    reduction achieved by each split node (0 at leaves).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    gain: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf id reached by each row."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    n_features: int

    def __len__(self):
        return len(self.trees)


def _convert(fitted) -> Tree:
    t = fitted.tree_
    split = t.children_left != _SK_LEAF
    weighted = t.weighted_n_node_samples
    sse = t.impurity * weighted
    gain = np.zeros(t.node_count)
    left, right = t.children_left[split], t.children_right[split]
    gain[split] = np.maximum(sse[split] - sse[left] - sse[right], 0.0)
    return Tree(
        np.where(split, t.feature, LEAF).astype(np.intp),
        np.where(split, t.threshold, 0.0).astype(np.float64),
        np.where(split, t.children_left, LEAF).astype(np.intp),
        np.where(split, t.children_right, LEAF).astype(np.intp),
        t.value[:, 0, 0].astype(np.float64),
        t.n_node_samples.astype(np.intp),
        gain,
    )


def fit_forest(features, target, config: ForestConfig = ForestConfig(), workers=None) -> Forest:
    """Fit ``config.n_trees`` regression trees.

    Tree ``t`` draws its bootstrap rows and feature subsets from a generator
    seeded with ``(config.seed, t)``, so the result does not depend on how
    many worker threads build the trees.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0:
        raise DataError("fit_forest needs a non-empty 2-d feature matrix")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
    if X.shape[0] < 2 * config.min_samples_leaf:
        raise DataError(
            f"{X.shape[0]} rows is fewer than 2 * min_samples_leaf ({config.min_samples_leaf})"
        )
    k = config.resolved_features(X.shape[1])
    d = X.shape[0]

    def build(t):
        seq = np.random.SeedSequence([config.seed, t])
        rng = np.random.default_rng(seq)
        rows = rng.integers(0, d, d) if config.bootstrap else np.arange(d)
        grower = DecisionTreeRegressor(
            max_depth=config.max_depth,
            min_samples_leaf=config.min_samples_leaf,
            max_features=k,
            random_state=int(seq.generate_state(1)[0] & 0x7FFFFFFF),
        )
        return _convert(grower.fit(X[rows], y[rows]))

    return Forest(tuple(ordered_map(build, range(config.n_trees), workers)), X.shape[1])


def forest_predict(forest: Forest, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise DataError(
            f"forest was trained on {forest.n_features} features, got shape {X.shape}"
        )
    total = np.zeros(X.shape[0])
    for tree in forest.trees:
        total += tree.predict(X)
    return total / len(forest.trees)


@dataclass(frozen=True)
class ImportanceRanking:
    """``(column, weight)`` pairs, heaviest first; weights sum to 1."""

    entries: tuple[tuple[int, float], ...]

    @property
    def columns(self) -> list[int]:
        return [c for c, _ in self.entries]

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.entries]

    @classmethod
    def from_weights(cls, weights, columns: Sequence[int] | None = None) -> "ImportanceRanking":
        weights = np.asarray(weights, dtype=np.float64)
        if columns is None:
            columns = range(weights.size)
        columns = list(columns)
        # stable: equal weights keep column order
        order = np.argsort(-weights, kind="stable")
        return cls(tuple((int(columns[i]), float(weights[i])) for i in order))


def feature_importances(forest: Forest) -> np.ndarray:
    """Normalized importance per feature, in column order."""
    totals = np.zeros(forest.n_features)
    for tree in forest.trees:
        split = tree.feature != LEAF
        np.add.at(totals, tree.feature[split], tree.gain[split])
    s = totals.sum()
    if s <= 0:
        return np.full(forest.n_features, 1.0 / forest.n_features)
    return totals / s


def rank_importances(forest: Forest, columns: Sequence[int] | None = None) -> ImportanceRanking:
    if not forest.trees:
        raise DataError("forest has no trees")
    return ImportanceRanking.from_weights(feature_importances(forest), columns)


@dataclass(frozen=True)
class FeatureSet:
    selected: tuple[int, ...]
    cumulative_weight: float


def select_features(ranking: ImportanceRanking, threshold: float = 0.95) -> FeatureSet:
    """Shortest prefix of the ranking whose summed weight exceeds ``threshold``.

    The feature that pushes the sum past the threshold is kept.
    """
    if not 0.0 < threshold < 1.0:
        raise DataError(f"threshold must lie in (0, 1), got {threshold}")
    selected = []
    cumulative = 0.0
    for column, weight in ranking.entries:
        selected.append(column)
        cumulative += weight
        if cumulative > threshold:
            break
    return FeatureSet(tuple(selected), cumulative)
