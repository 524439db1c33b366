"""Newton-boosted regression trees with logistic loss (the XGBoost recipe, exact greedy splits)."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .. import accounting
from ..hygiene import assert_trainable
from .tree import DecisionTree, grow_newton_tree, presort

FORMAT_VERSION = 1


def logistic_grad_hess(p, y):
    """Derivatives of the log-loss w.r.t. the margin: g = p - y, h = p (1 - p)."""
    return p - y, p * (1.0 - p)


def log_loss(p, y):
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass
class BoostedModel:
    trees: list
    learning_rate: float
    base_score: float
    lambda_reg: float
    max_depth: int
    seed: int
    n_features: int
    train_loss: list = field(default_factory=list)
    kind = "boosted_trees"

    @property
    def nbytes(self):
        return sum(t.nbytes for t in self.trees)

    def margin(self, rows):
        x = np.asarray(rows, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ValueError(f"expected rows with {self.n_features} features, got shape {x.shape}")
        out = np.full(x.shape[0], self.base_score)
        for t in self.trees:
            out += self.learning_rate * t.predict_value(x)
        return out

    def predict_proba(self, rows):
        return gbt_predict_proba(self, rows)

    def predict(self, rows):
        return (self.predict_proba(rows) >= 0.5).astype(np.int64)

    def to_dict(self):
        return {"format_version": FORMAT_VERSION, "kind": self.kind,
                "learning_rate": self.learning_rate, "base_score": self.base_score,
                "lambda_reg": self.lambda_reg, "max_depth": self.max_depth, "seed": self.seed,
                "n_features": self.n_features, "train_loss": list(self.train_loss),
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION or d.get("kind") != cls.kind:
            raise ValueError("not a version-1 boosted-trees document")
        return cls([DecisionTree.from_dict(t) for t in d["trees"]], d["learning_rate"],
                   d["base_score"], d["lambda_reg"], d["max_depth"], d["seed"], d["n_features"],
                   list(d["train_loss"]))


def gbt_train(train, n_rounds=100, max_depth=6, learning_rate=0.1, lambda_reg=1.0, seed=0):
    """Fit ``n_rounds`` trees to the logistic gradient/hessian of the running margin.

    ``seed`` is recorded for provenance only: without row or column
    subsampling the fit is deterministic.
    """
    assert_trainable(train, "gbt_train")
    n0, n1 = train.class_counts()
    if n0 == 0 or n1 == 0:
        raise ValueError("training data has a single class")
    x = train.features
    y = train.labels.astype(np.float64)
    base = math.log(n1 / n0)
    margin = np.full(x.shape[0], base)
    model = BoostedModel([], learning_rate, base, lambda_reg, max_depth, int(seed), x.shape[1])
    p = expit(margin)
    model.train_loss.append(log_loss(p, y))
    sorted_rows = presort(x)
    with accounting.live(train, sorted_rows):
        for _ in range(n_rounds):
            g, h = logistic_grad_hess(p, y)
            accounting.note(g, h, margin)
            tree = grow_newton_tree(x, g, h, max_depth, lambda_reg, sorted_rows)
            model.trees.append(tree)
            margin = margin + learning_rate * tree.predict_value(x)
            p = expit(margin)
            loss = log_loss(p, y)
            if not math.isfinite(loss):
                raise FloatingPointError(f"non-finite training loss at round {len(model.trees)}")
            model.train_loss.append(loss)
        accounting.note(model)
    return model


def gbt_predict_proba(model, rows):
    return expit(model.margin(rows))
