"""SMOTE: synthetic rows on segments between a real row and one of its k nearest same-class neighbours."""
from dataclasses import dataclass

import numpy as np

from .. import accounting
from .._random import make_rng
from ._base import check_target_class, check_trainable, synthetic_dataset

# query rows per distance block in the neighbour search
_BLOCK = 64


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")


def nearest_neighbors(x, k):
    """Indices of the ``k`` nearest other rows (Euclidean), ties broken by lower index."""
    n = x.shape[0]
    if k >= n:
        raise ValueError(f"k={k} neighbours need more than {k} rows, got {n}")
    sq = np.einsum("ij,ij->i", x, x)
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, _BLOCK):
        stop = min(n, start + _BLOCK)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (x[start:stop] @ x.T)
        accounting.note(d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


@dataclass
class SmoteModel:
    """Per-class reference rows and their neighbour tables."""
    config: SmoteConfig
    feature_names: list
    class_rows: dict
    neighbors: dict
    method = "smote"

    @property
    def nbytes(self):
        return sum(a.nbytes for a in self.class_rows.values()) + \
            sum(a.nbytes for a in self.neighbors.values())

    def sample_from(self, target_class, base, neighbor_rank, lam):
        """Deterministic core: row ``base`` moved ``lam`` of the way to its ``neighbor_rank``-th neighbour."""
        x = self.class_rows[target_class]
        nn = self.neighbors[target_class]
        base = np.asarray(base, dtype=np.int64)
        partner = nn[base, np.asarray(neighbor_rank, dtype=np.int64)]
        lam = np.asarray(lam, dtype=np.float64).reshape(-1, 1)
        return x[base] + lam * (x[partner] - x[base])

    def generate(self, target_class, n_samples, seed):
        check_target_class(target_class)
        rng = make_rng(seed, target_class)
        n_rows = self.class_rows[target_class].shape[0]
        base = rng.integers(0, n_rows, size=n_samples)
        rank = rng.integers(0, self.config.k_neighbors, size=n_samples)
        lam = rng.random(n_samples)
        feats = self.sample_from(target_class, base, rank, lam)
        return synthetic_dataset(feats, target_class, self.feature_names, "smote",
                                 {"n_samples": int(n_samples), "seed": int(seed),
                                  "k_neighbors": self.config.k_neighbors})


def smote_fit(ds, cfg=SmoteConfig(), classes=(0, 1)):
    """Index the given classes of ``ds`` for interpolation."""
    check_trainable(ds, "smote_fit", require_both=False)
    rows, neighbors = {}, {}
    with accounting.live(ds):
        for c in classes:
            x = np.ascontiguousarray(ds.features[ds.labels == c])
            if x.shape[0] <= cfg.k_neighbors:
                raise ValueError(
                    f"class {c} has {x.shape[0]} rows; k_neighbors={cfg.k_neighbors} needs more")
            rows[c] = x
            neighbors[c] = nearest_neighbors(x, cfg.k_neighbors)
        model = SmoteModel(cfg, list(ds.feature_names), rows, neighbors)
        accounting.note(model)
    return model


def smote_generate(ds, target_class, n_samples, cfg=SmoteConfig()):
    """Fit on ``ds`` and draw ``n_samples`` rows of ``target_class`` using ``cfg.seed``."""
    check_target_class(target_class)
    return smote_fit(ds, cfg, classes=(target_class,)).generate(target_class, n_samples, cfg.seed)
