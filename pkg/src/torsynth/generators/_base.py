import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..dataset import FlowDataset
from ..hygiene import assert_trainable


class TrainingError(RuntimeError):
    """Non-finite loss during training; ``epoch`` and ``batch`` are 1-based."""

    def __init__(self, message, epoch=None, batch=None):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")


@dataclass
class TrainLog:
    """One record per completed epoch: loss terms plus wall-clock seconds."""
    records: list = field(default_factory=list)

    def add(self, epoch, seconds, **losses):
        for name, value in losses.items():
            if not math.isfinite(value):
                raise TrainingError(f"non-finite {name} loss", epoch)
        self.records.append({"epoch": epoch, **{k: float(v) for k, v in losses.items()},
                             "seconds": float(seconds)})

    def series(self, name):
        return np.array([r[name] for r in self.records])

    @property
    def total_seconds(self):
        return float(sum(r["seconds"] for r in self.records))

    def losses_only(self):
        return [{k: v for k, v in r.items() if k != "seconds"} for r in self.records]

    def to_list(self):
        return [dict(r) for r in self.records]


def check_target_class(target_class):
    if target_class not in (0, 1):
        raise ValueError(f"target_class must be 0 or 1, got {target_class!r}")


def check_trainable(ds, path, require_both=True):
    """Refuse empty data and anything descended from a held-out test split."""
    assert_trainable(ds, path)
    if ds.n_rows == 0:
        raise ValueError("cannot train on an empty dataset")
    n0, n1 = ds.class_counts()
    if require_both and (n0 == 0 or n1 == 0):
        raise ValueError("training data must contain both classes")


def synthetic_dataset(features, target_class, feature_names, method, params):
    n = features.shape[0]
    return FlowDataset(features, np.full(n, target_class, dtype=np.int64), feature_names,
                       provenance=({"op": f"{method}_generate", "params": params},),
                       tags={"synthetic", f"synthetic:{method}"})


def with_label(x, label):
    """Append a constant label column to ``x`` (the conditioning input)."""
    return np.column_stack([x, np.full(x.shape[0], float(label))])


def with_labels(x, labels):
    return np.column_stack([x, np.asarray(labels, dtype=np.float64)])


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    def lap(self):
        now = time.perf_counter()
        elapsed = now - self.start
        self.start = now
        return elapsed
