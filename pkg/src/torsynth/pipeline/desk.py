"""Synthetic stand-in for the flow corpus, small enough for CI."""
import numpy as np

from .._random import make_rng
from ..dataset import FlowDataset, normalize_minmax


def make_desk_dataset(n_per_class=2000, n_features=26, class_separation=3.0, seed=0):
    """Two Gaussian classes, min-max normalized.

    Class 0 is centred at ``-class_separation * u`` and class 1 at
    ``+class_separation * u`` for a random unit vector ``u``; per-feature
    variances are drawn from U[0.5, 1.5] and shared by both classes. Rows are
    shuffled, so class counts are exact but order is random.
    """
    if n_features < 2:
        raise ValueError("n_features must be >= 2")
    if class_separation < 0:
        raise ValueError("class_separation must be >= 0")
    rng = make_rng(seed)
    u = rng.standard_normal(n_features)
    u /= np.linalg.norm(u)
    std = np.sqrt(rng.uniform(0.5, 1.5, size=n_features))
    noise = rng.standard_normal((2 * n_per_class, n_features)) * std
    labels = np.repeat([0, 1], n_per_class)
    signs = np.where(labels == 1, 1.0, -1.0)
    features = noise + class_separation * signs[:, None] * u
    order = rng.permutation(labels.size)
    ds = FlowDataset(features[order], labels[order],
                     [f"flow_{j:02d}" for j in range(n_features)],
                     provenance=({"op": "make_desk_dataset",
                                  "params": {"n_per_class": n_per_class, "n_features": n_features,
                                             "class_separation": class_separation,
                                             "seed": int(seed)}},),
                     tags={"real", "desk"})
    return normalize_minmax(ds)
