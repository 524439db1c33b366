"""Tree-ensemble detectors: a random forest and Newton-boosted trees."""
from .boosting import BoostedModel, gbt_predict_proba, gbt_train
from .forest import ForestModel, rf_predict, rf_predict_proba, rf_train
from .tree import DecisionTree, gini


def model_from_dict(d):
    """Rebuild either ensemble from its JSON document."""
    kind = d.get("kind")
    if kind == ForestModel.kind:
        return ForestModel.from_dict(d)
    if kind == BoostedModel.kind:
        return BoostedModel.from_dict(d)
    raise ValueError(f"unknown classifier kind {kind!r}")


__all__ = ["BoostedModel", "DecisionTree", "ForestModel", "gbt_predict_proba", "gbt_train",
           "gini", "model_from_dict", "rf_predict", "rf_predict_proba", "rf_train"]
