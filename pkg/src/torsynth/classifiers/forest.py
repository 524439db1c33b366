from dataclasses import dataclass

import numpy as np

from .. import accounting
from .._random import child_seeds, make_rng
from ..hygiene import assert_trainable
from .tree import DecisionTree, grow_classification_tree

FORMAT_VERSION = 1


@dataclass
class ForestModel:
    trees: list
    n_trees: int
    max_depth: int
    features_per_split: int
    seed: int
    n_features: int
    bootstrap: bool = True
    kind = "random_forest"

    @property
    def nbytes(self):
        return sum(t.nbytes for t in self.trees)

    def predict_proba(self, rows):
        return rf_predict_proba(self, rows)

    def predict(self, rows):
        return (self.predict_proba(rows) >= 0.5).astype(np.int64)

    def to_dict(self):
        return {"format_version": FORMAT_VERSION, "kind": self.kind, "n_trees": self.n_trees,
                "max_depth": self.max_depth, "features_per_split": self.features_per_split,
                "seed": self.seed, "n_features": self.n_features, "bootstrap": self.bootstrap,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION or d.get("kind") != cls.kind:
            raise ValueError("not a version-1 random forest document")
        return cls([DecisionTree.from_dict(t) for t in d["trees"]], d["n_trees"], d["max_depth"],
                   d["features_per_split"], d["seed"], d["n_features"], d["bootstrap"])


def _check_rows(rows, n_features):
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != n_features:
        raise ValueError(f"expected rows with {n_features} features, got shape {x.shape}")
    return x


def rf_train(train, n_trees=100, max_depth=12, features_per_split=None, seed=0, bootstrap=True):
    """Random forest of Gini trees.

    Tree ``i`` draws its bootstrap resample and per-node feature subsets from
    its own stream derived from ``(seed, i)``, so the forest is identical
    whatever order the trees are grown in. ``features_per_split`` defaults to
    ``floor(sqrt(n_features))``.
    """
    assert_trainable(train, "rf_train")
    if train.n_rows < 2:
        raise ValueError("need at least 2 training rows")
    n0, n1 = train.class_counts()
    if n0 == 0 or n1 == 0:
        raise ValueError("training data has a single class")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    d = train.n_features
    k = int(np.floor(np.sqrt(d))) if features_per_split is None else int(features_per_split)
    if not 1 <= k <= d:
        raise ValueError(f"features_per_split must be in [1, {d}]")
    x, y = train.features, train.labels
    trees = []
    with accounting.live(train):
        for i, tree_seed in enumerate(child_seeds(seed, n_trees)):
            rng = make_rng(tree_seed)
            if bootstrap:
                idx = rng.integers(0, x.shape[0], size=x.shape[0])
                xb, yb = x[idx], y[idx]
                accounting.note(xb, yb)
            else:
                xb, yb = x, y
            trees.append(grow_classification_tree(xb, yb, max_depth, k, rng))
        model = ForestModel(trees, n_trees, max_depth, k, int(seed), d, bootstrap)
        accounting.note(model)
    return model


def rf_tree_probas(model, rows):
    """(n_trees, n_rows) matrix of per-tree P(class 1)."""
    x = _check_rows(rows, model.n_features)
    return np.array([t.predict_value(x) for t in model.trees]).reshape(len(model.trees), -1)


def rf_predict_proba(model, rows):
    """Mean of the per-tree leaf probabilities."""
    return rf_tree_probas(model, rows).mean(axis=0)


def rf_predict(model, rows):
    return model.predict(rows)
